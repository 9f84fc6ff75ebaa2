"""Algebra-valued inner products, quantum theta series and their identities.

The closed route computes series coefficients from the Hermitian-form
exponential (times the discrete mode factors in the lattice kind). The
oracle route in :func:`inner_product_oracle` recomputes single
coefficients by brute force, pushing the theta vector through the
operator layer and integrating numerically; it must never touch
``gaussian_factor``, ``mode_factor`` or :func:`inner_product_closed`.

Quantum translations: the plane case uses the independent multiplier
e^{-pi H(g_, h_)}, so the functional equation is a genuine cross-check of
the cocycle identity e^{pi i Im H} = alpha. The lattice case defines the
multiplier by the coefficient quotient, as the functional equation there
demands; the tests then guard the implementation chain rather than a new
identity. Quotients and triple products are evaluated through complex
logarithms of the coefficients, since raw products underflow long before
the quotients become ill-defined.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .embedding import (
    EmbeddingKind,
    EmbeddingMap,
    LatticeElement,
    cocycle_phase,
    element_add,
    enumerate_indices,
    lattice_element,
    pairing,
)
from .errors import (
    InternalIdentityViolated,
    KindMismatch,
    TruncationTooSmall,
    UnsupportedVector,
)
from .heisenberg import ClosedFormVector, apply_pi
from .special import (
    HermitianFormContext,
    gaussian_factor,
    gaussian_quadrature_oracle,
    gaussian_quadrature_oracle_2d,
    hermitian_form,
    mode_factor,
)
from .structures import ComplexStructure, MixedStructure, theta_vector

REASSEMBLY_REL_TOL = 1e-12
COEFFICIENT_FLOOR = 1e-300


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one identity check: labeled residuals against a tolerance."""

    name: str
    residuals: tuple[tuple[str, float], ...]
    max_residual: float
    tolerance: float
    passed: bool
    metadata: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name: str, residuals, tolerance: float, **metadata):
        residuals = tuple((str(k), float(v)) for k, v in residuals)
        worst = max((v for _, v in residuals), default=0.0)
        return cls(name, residuals, worst, float(tolerance),
                   worst <= tolerance, metadata)


def structure_context(structure: ComplexStructure) -> HermitianFormContext:
    """Hermitian-form context matching a complex structure."""
    if isinstance(structure, MixedStructure):
        return HermitianFormContext(structure.T)
    return HermitianFormContext(structure.omega)


def _continuous_pair(h: LatticeElement):
    if h.kind is EmbeddingKind.LATTICE:
        return (h.w1, h.w2)
    return (h.m_part, h.dual_part)


def _label(k) -> str:
    return ",".join(str(int(c)) for c in k)


def inner_product_closed(f: ClosedFormVector, h: LatticeElement,
                         tol: float = 1e-12) -> complex:
    """Closed form of <f, pi_h f> for a canonical theta vector.

    Lattice kind: the two discrete mode factors times the Gaussian
    self-pairing of the continuous pair. Vector-space kind: the Gaussian
    self-pairing of the full pair.
    """
    if f.kind is not h.kind:
        raise KindMismatch("vector and element kinds differ")
    if (np.any(np.asarray(f.linear) != 0) or f.amplitude != 1.0
            or f.n_shift != (0, 0) or f.n_phase != (0.0, 0.0)):
        raise UnsupportedVector("closed form requires the canonical theta vector")
    ctx = HermitianFormContext(f.quadratic)
    if h.kind is EmbeddingKind.LATTICE:
        theta2_eff = 1.0 / f.decay
        m1, m2 = h.m_shift
        t1, t2 = h.t_lift
        return (mode_factor(t1, m1, theta2_eff, tol)
                * mode_factor(t2, m2, theta2_eff, tol)
                * gaussian_factor(ctx, (h.w1, h.w2)))
    return gaussian_factor(ctx, (h.m_part, h.dual_part))


def _discrete_cross_sum(decay: float, u_f, u_g, dv, tol: float) -> complex:
    """Brute-force sum over Z^2 of the discrete part of f conj(pi_h f).

    Terms e^{-pi decay (|n+u_f|^2 + |n+u_g|^2)} e^{2 pi i dv . n} on a
    window centered between the two shifts, with the window radius chosen
    so the neglected ring is provably below tol relative to the leading
    term; the boundary ring is checked after the fact as well.
    """
    u_f = np.asarray(u_f, dtype=float)
    u_g = np.asarray(u_g, dtype=float)
    center = np.round(-(u_f + u_g) / 2.0).astype(int)
    reach = math.ceil(math.sqrt(math.log(100.0 / tol) / (2.0 * math.pi * decay))) + 2
    n1 = center[0] + np.arange(-reach, reach + 1)
    n2 = center[1] + np.arange(-reach, reach + 1)
    a, b = np.meshgrid(n1, n2, indexing="ij")
    expo = (-math.pi * decay * ((a + u_f[0]) ** 2 + (b + u_f[1]) ** 2
                                + (a + u_g[0]) ** 2 + (b + u_g[1]) ** 2)
            + 2j * math.pi * (dv[0] * a + dv[1] * b))
    terms = np.exp(expo)
    mags = np.abs(terms)
    interior_max = float(mags.max())
    ring = np.ones_like(mags, dtype=bool)
    ring[1:-1, 1:-1] = False
    if interior_max > 0 and float(mags[ring].max()) > tol * interior_max / 10.0:
        raise InternalIdentityViolated("discrete window too small for the requested tol")
    return complex(terms.sum())


def inner_product_oracle(f: ClosedFormVector, h: LatticeElement,
                         tol: float = 1e-10) -> complex:
    """Brute-force <f, pi_h f>: operator layer + quadrature + direct sums.

    pi_h f is produced by the Heisenberg operator itself; the pointwise
    product f conj(pi_h f) is then integrated by the quarantined
    quadrature oracle (1d, or 2d tensorized) and summed directly over the
    discrete modes. Shares no closed-form helpers with
    :func:`inner_product_closed`.
    """
    if not isinstance(f, ClosedFormVector):
        raise UnsupportedVector("the oracle integrates closed-form vectors")
    g = apply_pi(h, f)
    amp = f.amplitude * np.conj(g.amplitude)
    if f.kind is EmbeddingKind.LATTICE:
        quad = f.quadratic - np.conj(g.quadratic)
        lin = 2.0 * (f.linear - np.conj(g.linear))
        s_part = gaussian_quadrature_oracle(quad, lin, 0.0, tol)
        dv = (f.n_phase[0] - g.n_phase[0], f.n_phase[1] - g.n_phase[1])
        n_part = _discrete_cross_sum(f.decay, f.n_shift, g.n_shift, dv, tol)
        return complex(amp * s_part * n_part)
    quad = np.asarray(f.quadratic) - np.conj(np.asarray(g.quadratic))
    lin = 2.0 * (np.asarray(f.linear, dtype=complex) - np.conj(np.asarray(g.linear, dtype=complex)))
    return complex(amp * gaussian_quadrature_oracle_2d(quad, lin, 0.0, tol))


@dataclass(frozen=True)
class QuantumThetaSeries:
    """Truncation of the quantum theta series for one embedding.

    ``coefficients`` maps integer indices to the algebra coefficients;
    ``normalization`` is the constant relating the self-pairing of the
    theta vector to the series.
    """

    embedding: EmbeddingMap
    structure: ComplexStructure
    radius: int
    normalization: float
    coefficients: dict[tuple[int, int, int, int], complex]

    @property
    def kind(self) -> EmbeddingKind:
        return self.embedding.kind

    def context(self) -> HermitianFormContext:
        return structure_context(self.structure)

    def coefficient(self, k) -> complex:
        return self.coefficients[tuple(int(c) for c in k)]

    def element(self, k) -> LatticeElement:
        return lattice_element(self.embedding, k)


def _site_mode_product(structure: MixedStructure, h: LatticeElement,
                       cache: dict | None = None) -> complex:
    theta2_eff = 1.0 / structure.lattice_decay
    m1, m2 = h.m_shift
    t1, t2 = h.t_lift
    out = 1.0 + 0.0j
    for t, m in ((t1, m1), (t2, m2)):
        key = (t, m)
        if cache is not None and key in cache:
            out *= cache[key]
            continue
        val = mode_factor(t, m, theta2_eff)
        if cache is not None:
            cache[key] = val
        out *= val
    return out


def c_factor(series: QuantumThetaSeries, g: LatticeElement) -> complex:
    """Translation coefficient of the functional equation at g.

    Plane case: e^{-(pi/2) H(g_, g_)}. Lattice case: the discrete mode
    product times the continuous Gaussian exponential, identical to the
    series coefficient at g.
    """
    ctx = series.context()
    hh = hermitian_form(ctx, _continuous_pair(g), _continuous_pair(g))
    val = cmath.exp(-0.5 * math.pi * hh)
    if series.kind is EmbeddingKind.LATTICE:
        val *= _site_mode_product(series.structure, g)
    return val


def _log_c(series: QuantumThetaSeries, g: LatticeElement) -> complex:
    """log of the translation coefficient; safe for strongly decayed g."""
    ctx = series.context()
    out = -0.5 * math.pi * complex(hermitian_form(ctx, _continuous_pair(g), _continuous_pair(g)))
    if series.kind is EmbeddingKind.LATTICE:
        site = _site_mode_product(series.structure, g)
        if abs(site) < COEFFICIENT_FLOOR:
            raise InternalIdentityViolated(
                "vanishing mode product; translation quotient undefined")
        out += cmath.log(site)
    return out


def _log_alpha(x: LatticeElement, y: LatticeElement) -> complex:
    """Unreduced logarithm i pi (<x1,y2> - <y1,x2>) of the cocycle."""
    return 1j * math.pi * (pairing(x.m_part, y.dual_part)
                           - pairing(y.m_part, x.dual_part))


def translation_factor(series: QuantumThetaSeries, g: LatticeElement,
                       h: LatticeElement) -> complex:
    """Multiplier of the quantum translation by g on the basis element at h.

    Plane case: the independent exponential e^{-pi H(g_, h_)}. Lattice
    case: the coefficient quotient C(g+h) / (C(g) C(h) alpha(g, h)).
    """
    ctx = series.context()
    if series.kind is EmbeddingKind.VECTOR_SPACE:
        return cmath.exp(-math.pi * hermitian_form(ctx, _continuous_pair(g),
                                                   _continuous_pair(h)))
    gh = element_add(series.embedding, g, h)
    expo = _log_c(series, gh) - _log_c(series, g) - _log_c(series, h) - _log_alpha(g, h)
    return cmath.exp(expo)


def basis_multiply(k1, k2, emb: EmbeddingMap):
    """Product of two algebra basis elements: cocycle phase and index sum."""
    k1 = np.asarray(k1, dtype=np.int64)
    k2 = np.asarray(k2, dtype=np.int64)
    phase = cocycle_phase(lattice_element(emb, k1), lattice_element(emb, k2))
    return phase, tuple(int(c) for c in (k1 + k2))


def quantum_theta_series(emb: EmbeddingMap, structure: ComplexStructure,
                         radius: int = 4) -> QuantumThetaSeries:
    """Compute all series coefficients with index sup norm <= radius.

    On the way out, the defining relation is re-assembled: for every index
    with sup norm <= min(radius, 2), normalization times the coefficient
    must reproduce the closed-form inner product.
    """
    if radius < 1:
        raise ValueError("radius must be at least 1")
    if emb.kind is not structure.kind:
        raise KindMismatch("embedding and structure kinds differ")
    ctx = structure_context(structure)
    ks = enumerate_indices(radius)
    ambient = ks.astype(float) @ emb.entries.T

    if emb.kind is EmbeddingKind.LATTICE:
        w1 = ambient[:, 0]
        w2 = ambient[:, 3]
        hbar = ctx.T * w1 + w2
        h_vals = (hbar * np.conj(hbar)).real * ctx.im_inverse
        gauss = np.exp(-0.5 * math.pi * h_vals)
        cache: dict = {}
        m_parts = ks[:, 2:] @ emb.m.T
        coeffs = {}
        theta2_eff = 1.0 / structure.lattice_decay
        for row, k in enumerate(ks):
            t1, t2 = ambient[row, 4], ambient[row, 5]
            m1, m2 = int(m_parts[row, 0]), int(m_parts[row, 1])
            site = 1.0 + 0.0j
            for t, m in ((t1, m1), (t2, m2)):
                key = (t, m)
                if key not in cache:
                    cache[key] = mode_factor(t, m, theta2_eff)
                site *= cache[key]
            coeffs[tuple(int(c) for c in k)] = complex(site * gauss[row])
    else:
        x1 = ambient[:, :2]
        x2 = ambient[:, 2:]
        hbar = x1 @ np.asarray(ctx.T).T + x2
        h_vals = np.einsum("ni,ij,nj->n", hbar, ctx.im_inverse, np.conj(hbar)).real
        gauss = np.exp(-0.5 * math.pi * h_vals)
        coeffs = {tuple(int(c) for c in k): complex(g) for k, g in zip(ks, gauss)}

    series = QuantumThetaSeries(emb, structure, radius, ctx.normalization(), coeffs)

    f = theta_vector(structure)
    check_radius = min(radius, 2)
    for k in enumerate_indices(check_radius):
        key = tuple(int(c) for c in k)
        closed = inner_product_closed(f, lattice_element(emb, k))
        assembled = series.normalization * coeffs[key]
        if abs(assembled - closed) > REASSEMBLY_REL_TOL * max(abs(closed), 1e-30):
            raise InternalIdentityViolated(
                f"series coefficient at {key} does not reassemble the inner product")
    return series


def series_tail_bound(series: QuantumThetaSeries, radius: int | None = None) -> float:
    """Upper bound on the summed coefficient magnitudes beyond the radius.

    Coefficient magnitudes are dominated by e^{-E(k)} for an explicit
    positive quadratic form E; the bound sums shell counts against the
    smallest eigenvalue of E. Used to document the radius at which the
    truncation error is negligible.
    """
    r = series.radius if radius is None else radius
    emb = series.embedding
    ctx = series.context()
    if emb.kind is EmbeddingKind.LATTICE:
        t = ctx.T
        p = np.array([emb.theta1 * t, 1.0], dtype=complex)
        cont = 0.5 * math.pi * ctx.im_inverse * np.outer(np.conj(p), p).real
        c = series.structure.lattice_decay
        mtm = (emb.m.T @ emb.m).astype(float)
        disc = 0.5 * math.pi * c * mtm
        lam = min(np.linalg.eigvalsh(cont).min(), np.linalg.eigvalsh(disc).min())
        # mode-factor surplus: sum over one axis of e^{-2 pi c (n + phi)^2} <= theta(2ci)
        from .special import jacobi_theta
        k_const = float(jacobi_theta(2j * c, 0.0).real) ** 2
    else:
        om = np.asarray(ctx.T)
        p = np.zeros((2, 4), dtype=complex)
        p[:, 0] = om[:, 0] * emb.theta1
        p[:, 2] = om[:, 1] * emb.theta2
        p[0, 1] = 1.0
        p[1, 3] = 1.0
        form = 0.5 * math.pi * (p.conj().T @ ctx.im_inverse @ p).real
        lam = float(np.linalg.eigvalsh(form).min())
        k_const = 1.0
    total = 0.0
    shell = r + 1
    while True:
        count = (2 * shell + 1) ** 4 - (2 * shell - 1) ** 4
        term = k_const * count * math.exp(-lam * shell * shell)
        total += term
        if term < 1e-30 or shell > r + 200:
            break
        shell += 1
    return total


def phase_identity_max_residual(emb: EmbeddingMap, structure: ComplexStructure,
                                radius: int = 2) -> float:
    """Worst defect of e^{pi i Im H(g_, h_)} = alpha(g, h) over all pairs.

    This identity is what makes the plane-case functional equation hold
    with the independent translation multiplier; it fails for the lattice
    kind, where the pairing sees the discrete coordinates but the
    Hermitian form does not.
    """
    from .embedding import _pairing_exponent_table

    ctx = structure_context(structure)
    ks = enumerate_indices(radius)
    amb = ks.astype(float) @ emb.entries.T
    if emb.kind is EmbeddingKind.VECTOR_SPACE:
        hbar = amb[:, :2] @ np.asarray(ctx.T).T + amb[:, 2:]
        h_mat = np.einsum("ai,ij,bj->ab", hbar, ctx.im_inverse, np.conj(hbar))
    else:
        hbar = ctx.T * amb[:, 0] + amb[:, 3]
        h_mat = np.outer(hbar, np.conj(hbar)) * ctx.im_inverse
    expo = _pairing_exponent_table(emb, ks, ks)
    return float(np.max(np.abs(np.exp(1j * math.pi * h_mat.imag) - np.exp(1j * math.pi * expo))))


def verify_functional_equation(series: QuantumThetaSeries, g: LatticeElement,
                               tolerance: float | None = None) -> VerificationReport:
    """Check that translating the series by g reproduces it coefficientwise.

    The left side at index g+h is C(g) C(h) alpha(g, h) T_g(h); the right
    side is the stored coefficient. Only interior indices are compared, so
    truncation never masquerades as failure.
    """
    radius = series.radius
    kg = np.asarray(g.k)
    g_norm = int(np.max(np.abs(kg)))
    if g_norm > radius // 2:
        raise TruncationTooSmall(
            f"translation index norm {g_norm} exceeds radius/2 = {radius // 2}")
    if tolerance is None:
        tolerance = 1e-9 if series.kind is EmbeddingKind.VECTOR_SPACE else 1e-12
    ctx = series.context()
    emb = series.embedding
    interior = radius - g_norm

    residuals = []
    if series.kind is EmbeddingKind.VECTOR_SPACE:
        h_gg = complex(hermitian_form(ctx, _continuous_pair(g), _continuous_pair(g)))
    for kh in enumerate_indices(radius):
        ksum = kg + kh
        if np.max(np.abs(ksum)) > interior:
            continue
        h = lattice_element(emb, kh)
        alpha, _ = basis_multiply(kg, kh, emb)
        if series.kind is EmbeddingKind.VECTOR_SPACE:
            h_hh = complex(hermitian_form(ctx, _continuous_pair(h), _continuous_pair(h)))
            h_gh = complex(hermitian_form(ctx, _continuous_pair(g), _continuous_pair(h)))
            lhs = cmath.exp(-0.5 * math.pi * (h_gg + h_hh) - math.pi * h_gh) * alpha
        else:
            lt = (_log_c(series, element_add(emb, g, h))
                  - _log_c(series, g) - _log_c(series, h) - _log_alpha(g, h))
            lhs = cmath.exp(_log_c(series, g) + _log_c(series, h) + lt) * alpha
        rhs = series.coefficient(ksum)
        residuals.append((_label(ksum), abs(lhs - rhs)))
    return VerificationReport.build(
        f"functional-equation g={_label(kg)}", residuals, tolerance,
        radius=radius, interior=interior, kind=series.kind.value)


def verify_consistency_condition(series: QuantumThetaSeries, g: LatticeElement,
                                 h: LatticeElement,
                                 tolerance: float | None = None) -> VerificationReport:
    """Check C(g+h) = C(g) C(h) T_g(h) alpha(g, h) for one pair.

    In the plane case this is the nontrivial content of the functional
    equation and reduces to e^{pi i Im H(g_, h_)} = alpha(g, h), which is
    reported as a second labeled residual.
    """
    if tolerance is None:
        tolerance = 1e-10 if series.kind is EmbeddingKind.VECTOR_SPACE else 1e-12
    emb = series.embedding
    gh = element_add(emb, g, h)
    alpha = cocycle_phase(g, h)
    residuals = []
    if series.kind is EmbeddingKind.VECTOR_SPACE:
        ctx = series.context()
        h_gh = complex(hermitian_form(ctx, _continuous_pair(g), _continuous_pair(h)))
        lhs = c_factor(series, g) * c_factor(series, h) * cmath.exp(-math.pi * h_gh) * alpha
        rhs = c_factor(series, gh)
        residuals.append(("quotient", abs(lhs - rhs)))
        residuals.append(("phase-identity",
                          abs(cmath.exp(1j * math.pi * h_gh.imag) - alpha)))
    else:
        lt = (_log_c(series, gh) - _log_c(series, g) - _log_c(series, h)
              - _log_alpha(g, h))
        lhs = cmath.exp(_log_c(series, g) + _log_c(series, h) + lt) * alpha
        rhs = cmath.exp(_log_c(series, gh))
        residuals.append(("quotient", abs(lhs - rhs)))
    return VerificationReport.build(
        f"consistency g={_label(g.k)} h={_label(h.k)}", residuals, tolerance,
        kind=series.kind.value)


def additivity_gap(series: QuantumThetaSeries, g1: LatticeElement,
                   g2: LatticeElement, h: LatticeElement) -> float:
    """|T_{g1}(h) T_{g2}(h) / T_{g1+g2}(h) - 1|, the additivity defect.

    Plane translations are additive because the Hermitian form is linear
    in its first slot; lattice translations are not, because the mode
    factors do not multiply exponentially.
    """
    emb = series.embedding
    if series.kind is EmbeddingKind.VECTOR_SPACE:
        ctx = series.context()
        g12 = element_add(emb, g1, g2)
        expo = -math.pi * (
            complex(hermitian_form(ctx, _continuous_pair(g1), _continuous_pair(h)))
            + complex(hermitian_form(ctx, _continuous_pair(g2), _continuous_pair(h)))
            - complex(hermitian_form(ctx, _continuous_pair(g12), _continuous_pair(h))))
        return abs(cmath.exp(expo) - 1.0)

    def log_t(g):
        return (_log_c(series, element_add(emb, g, h)) - _log_c(series, g)
                - _log_c(series, h) - _log_alpha(g, h))

    g12 = element_add(emb, g1, g2)
    return abs(cmath.exp(log_t(g1) + log_t(g2) - log_t(g12)) - 1.0)
