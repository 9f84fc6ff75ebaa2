"""Module vectors and the Heisenberg operators acting on them.

Vectors come in two flavors. A :class:`ClosedFormVector` is a Gaussian
descriptor (quadratic, linear and constant exponent data plus discrete
decay), closed under every operator in this module, and evaluable exactly
at arbitrary points. A :class:`SampledVector` holds grid samples and
optionally remembers the closed form it was sampled from; operator
application prefers exact re-evaluation of the transformed closed form
over interpolation.

Operator word order: products are written as acting on the right, so in
the word U_j U_i the factor U_j acts first. The measured commutation phase
(U_j U_i f) / (U_i U_j f) then equals e^{2 pi i theta_ij} with theta from
:func:`nctheta.embedding.commutation_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .embedding import (
    EmbeddingKind,
    EmbeddingMap,
    LatticeElement,
    lattice_element,
)
from .errors import (
    DegenerateTestVector,
    GridIncompatibleShift,
    KindMismatch,
    NotPositive,
    SingularIntegerMatrix,
    UnsupportedVector,
)

PHASE_MASK_THRESHOLD = 1e-8
GRID_SNAP_TOL = 1e-9


def _min_im_eig(quadratic) -> float:
    q = np.asarray(quadratic, dtype=complex)
    if q.ndim == 0:
        return float(q.imag)
    return float(np.min(np.linalg.eigvalsh(q.imag)))


@dataclass(frozen=True)
class ClosedFormVector:
    """Gaussian module element, exactly evaluable and operator-stable.

    Lattice kind:
        f(s, n1, n2) = amplitude
                       * exp(pi i (quadratic s^2 + 2 linear s))
                       * exp(-pi decay |n + n_shift|^2)
                       * exp(2 pi i n_phase . n)
    Vector-space kind (no discrete factors):
        f(s1, s2) = amplitude * exp(pi i (S^t quadratic S + 2 linear . S))

    ``finite_vector`` optionally carries a function on the finite group
    factor; only the generator layer touches it.
    """

    kind: EmbeddingKind
    quadratic: complex | np.ndarray
    linear: complex | np.ndarray = 0.0
    amplitude: complex = 1.0
    decay: float | None = None
    n_shift: tuple[int, int] = (0, 0)
    n_phase: tuple[float, float] = (0.0, 0.0)
    finite_vector: np.ndarray | None = None

    def __post_init__(self):
        if _min_im_eig(self.quadratic) <= 0:
            raise NotPositive("Im(quadratic) must be positive (definite)")
        if self.kind is EmbeddingKind.LATTICE and (self.decay is None or self.decay <= 0):
            raise NotPositive("lattice vectors need a positive discrete decay")

    def evaluate(self, *coords) -> np.ndarray:
        """Pointwise values; arguments broadcast like numpy arrays."""
        if self.kind is EmbeddingKind.LATTICE:
            s, n1, n2 = [np.asarray(c) for c in coords]
            expo = 1j * math.pi * (self.quadratic * s * s + 2.0 * self.linear * s)
            u1, u2 = self.n_shift
            expo = expo - math.pi * self.decay * ((n1 + u1) ** 2 + (n2 + u2) ** 2)
            expo = expo + 2j * math.pi * (self.n_phase[0] * n1 + self.n_phase[1] * n2)
            return self.amplitude * np.exp(expo)
        s1, s2 = [np.asarray(c) for c in coords]
        q = np.asarray(self.quadratic)
        l = np.asarray(self.linear, dtype=complex)
        quad = q[0, 0] * s1 * s1 + (q[0, 1] + q[1, 0]) * s1 * s2 + q[1, 1] * s2 * s2
        return self.amplitude * np.exp(1j * math.pi * (quad + 2.0 * (l[0] * s1 + l[1] * s2)))

    def sup_extent(self, floor: float = 1e-45) -> float:
        """Continuous half-width beyond which |f| drops under ``floor``."""
        rate = math.pi * _min_im_eig(self.quadratic)
        return math.sqrt(-math.log(floor) / rate) + 1.0


@dataclass(frozen=True)
class SampledVector:
    """Grid samples of a module element.

    ``axes`` holds the continuous sample axes (one array for the lattice
    kind, two for the vector-space kind); lattice vectors also carry the
    symmetric integer window n in [-window, window]^2. ``source`` points
    back at the closed form the samples came from, when there is one.
    """

    kind: EmbeddingKind
    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    window: int | None = None
    source: ClosedFormVector | None = None
    finite_vector: np.ndarray | None = None
    interpolated: bool = False

    @property
    def step(self) -> float:
        ax = self.axes[0]
        return float(ax[1] - ax[0])

    def window_range(self) -> np.ndarray:
        return np.arange(-self.window, self.window + 1)

    def grids(self):
        """Open mesh of all coordinates, broadcastable against values."""
        if self.kind is EmbeddingKind.LATTICE:
            n = self.window_range()
            return np.ix_(self.axes[0], n, n)
        return np.ix_(self.axes[0], self.axes[1])


def theta_test_vector(emb: EmbeddingMap, im_scale: float = 2.0) -> ClosedFormVector:
    """A generic normalized Gaussian suitable for operator measurements."""
    if emb.kind is EmbeddingKind.LATTICE:
        return ClosedFormVector(emb.kind, quadratic=1j * im_scale,
                                decay=1.0 / emb.theta34)
    return ClosedFormVector(emb.kind, quadratic=1j * im_scale * np.eye(2),
                            linear=np.zeros(2))


def sample_vector(f: ClosedFormVector, step: float, extent: float | None = None,
                  window: int | None = None,
                  finite_vector: np.ndarray | None = None) -> SampledVector:
    """Sample a closed form on a symmetric uniform grid; the source is kept.

    Default extent keeps Gaussian tails below 1e-45 so that boundary
    zero-fill in raw shifts never matters at verification tolerances.
    """
    if extent is None:
        extent = f.sup_extent()
    n_pts = int(round(extent / step))
    axis = step * np.arange(-n_pts, n_pts + 1)
    if f.kind is EmbeddingKind.LATTICE:
        if window is None:
            window = math.ceil(math.sqrt(-math.log(1e-45) / (math.pi * f.decay))) + 1
        n = np.arange(-window, window + 1)
        vals = f.evaluate(*np.ix_(axis, n, n))
        return SampledVector(f.kind, (axis,), vals, window=window, source=f,
                             finite_vector=_pick_finite(f, finite_vector))
    vals = f.evaluate(*np.ix_(axis, axis))
    return SampledVector(f.kind, (axis, axis), vals, source=f,
                         finite_vector=_pick_finite(f, finite_vector))


def _pick_finite(f: ClosedFormVector, override):
    return f.finite_vector if override is None else override


def default_finite_vector(fp) -> np.ndarray:
    """Deterministic nowhere-vanishing test function on Z_m1 x Z_m2."""
    k1 = np.arange(fp.m1)[:, None]
    k2 = np.arange(fp.m2)[None, :]
    mag = 1.0 + 0.25 * np.cos(1.0 + k1 + 2.0 * k2)
    return mag * np.exp(2j * math.pi * (0.37 * k1 + 0.71 * k2))


def _transform_closed(h: LatticeElement, f: ClosedFormVector) -> ClosedFormVector:
    """Push a closed form through pi_h; the Gaussian class is stable."""
    if f.kind is not h.kind:
        raise KindMismatch("vector and lattice element kinds differ")
    if h.kind is EmbeddingKind.LATTICE:
        w1, w2 = h.w1, h.w2
        m1, m2 = h.m_shift
        t = h.t_lift
        T, L = f.quadratic, f.linear
        amp = f.amplitude
        amp *= np.exp(1j * math.pi * (T * w1 * w1 + 2.0 * L * w1))
        amp *= np.exp(2j * math.pi * (f.n_phase[0] * m1 + f.n_phase[1] * m2))
        amp *= np.exp(1j * math.pi * (w1 * w2 + m1 * t[0] + m2 * t[1]))
        return replace(
            f,
            linear=T * w1 + L + w2,
            amplitude=complex(amp),
            n_shift=(f.n_shift[0] + m1, f.n_shift[1] + m2),
            n_phase=(f.n_phase[0] + t[0], f.n_phase[1] + t[1]),
        )
    x1, x2 = h.m_part, h.dual_part
    q = np.asarray(f.quadratic)
    l = np.asarray(f.linear, dtype=complex)
    amp = f.amplitude * np.exp(1j * math.pi * (x1 @ q @ x1 + 2.0 * (l @ x1) + x1 @ x2))
    return replace(f, linear=q @ x1 + l + x2, amplitude=complex(amp))


def _phase_on_grid(h: LatticeElement, sampled: SampledVector) -> np.ndarray:
    if h.kind is EmbeddingKind.LATTICE:
        s, n1, n2 = sampled.grids()
        t = h.t_lift
        m1, m2 = h.m_shift
        sym = h.w1 * h.w2 + m1 * t[0] + m2 * t[1]
        return np.exp(2j * math.pi * (h.w2 * s + t[0] * n1 + t[1] * n2)
                      + 1j * math.pi * sym)
    s1, s2 = sampled.grids()
    x1, x2 = h.m_part, h.dual_part
    return np.exp(2j * math.pi * (x2[0] * s1 + x2[1] * s2)
                  + 1j * math.pi * float(x1 @ x2))


def _shift_axis(values: np.ndarray, axis: int, offset: int) -> np.ndarray:
    """out[i] = values[i + offset] with zero fill outside the array."""
    out = np.zeros_like(values)
    n = values.shape[axis]
    src = slice(max(0, offset), min(n, n + offset))
    dst = slice(max(0, -offset), min(n, n - offset))
    idx_src = [slice(None)] * values.ndim
    idx_dst = [slice(None)] * values.ndim
    idx_src[axis] = src
    idx_dst[axis] = dst
    out[tuple(idx_dst)] = values[tuple(idx_src)]
    return out


def _interp_axis(values: np.ndarray, axis: np.ndarray, shift: float,
                 axis_index: int) -> np.ndarray:
    from scipy.interpolate import CubicSpline

    spline = CubicSpline(axis, values, axis=axis_index, extrapolate=False)
    out = spline(axis + shift)
    return np.nan_to_num(out, nan=0.0)


def apply_pi(h: LatticeElement, f, allow_interpolation: bool = False):
    """Heisenberg operator pi_h: translate by the M part, modulate by the
    dual part, with the symmetrizing half-phase on the cross term.

    Closed forms stay closed forms. Sampled vectors with a source are
    re-evaluated exactly; raw sampled vectors require grid-compatible
    shifts unless cubic interpolation is explicitly allowed (the result is
    then flagged ``interpolated``). The finite factor is untouched here;
    see :func:`apply_generator`.
    """
    if isinstance(f, ClosedFormVector):
        return _transform_closed(h, f)
    if f.kind is not h.kind:
        raise KindMismatch("vector and lattice element kinds differ")
    if f.source is not None:
        new_source = _transform_closed(h, f.source)
        return replace(f, values=new_source.evaluate(*f.grids()), source=new_source)

    # Raw samples: translate indices, then modulate in place.
    step = f.step
    interpolated = f.interpolated
    if f.kind is EmbeddingKind.LATTICE:
        ratio = h.w1 / step
        vals = f.values
        if abs(ratio - round(ratio)) <= GRID_SNAP_TOL:
            vals = _shift_axis(vals, 0, int(round(ratio)))
        elif allow_interpolation:
            vals = _interp_axis(vals, f.axes[0], h.w1, 0)
            interpolated = True
        else:
            raise GridIncompatibleShift(
                f"shift {h.w1} is not a multiple of the grid step {step}")
        m1, m2 = h.m_shift
        vals = _shift_axis(_shift_axis(vals, 1, m1), 2, m2)
        return replace(f, values=_phase_on_grid(h, f) * vals,
                       source=None, interpolated=interpolated)
    vals = f.values
    for ax, shift in enumerate(h.m_part):
        ratio = shift / step
        if abs(ratio - round(ratio)) <= GRID_SNAP_TOL:
            vals = _shift_axis(vals, ax, int(round(ratio)))
        elif allow_interpolation:
            vals = _interp_axis(vals, f.axes[ax], float(shift), ax)
            interpolated = True
        else:
            raise GridIncompatibleShift(
                f"shift {shift} is not a multiple of the grid step {step}")
    return replace(f, values=_phase_on_grid(h, f) * vals,
                   source=None, interpolated=interpolated)


def _finite_operator(fp, j: int, finite_vector: np.ndarray) -> np.ndarray:
    """Generator action on the finite factor Z_m1 x Z_m2."""
    v = finite_vector
    if j == 1:
        return np.roll(v, 1, axis=0)
    if j == 2:
        k1 = np.arange(fp.m1)[:, None]
        return np.exp(2j * math.pi * fp.n1 * k1 / fp.m1) * v
    if j == 3:
        return np.roll(v, 1, axis=1)
    k2 = np.arange(fp.m2)[None, :]
    return np.exp(2j * math.pi * fp.n2 * k2 / fp.m2) * v


def generator_element(emb: EmbeddingMap, j: int) -> LatticeElement:
    """Lattice element realizing the continuous part of generator U_j.

    With a finite factor present, the vector-space shifts acquire the
    rational corrections n_i/m_i that the finite operators cancel in the
    commutation phases.
    """
    if not 1 <= j <= 4:
        raise ValueError("generator index must be in 1..4")
    el = lattice_element(emb, np.eye(4, dtype=np.int64)[j - 1])
    fp = emb.finite_part
    if fp is None or emb.kind is not EmbeddingKind.VECTOR_SPACE:
        return el
    m_part = el.m_part.copy()
    if j == 1:
        m_part[0] += fp.n1 / fp.m1
    elif j == 3:
        m_part[1] += fp.n2 / fp.m2
    return replace(el, m_part=m_part)


def apply_generator(emb: EmbeddingMap, j: int, f, allow_interpolation: bool = False):
    """Torus generator U_j acting on a module vector.

    Equals pi at the j-th embedding column; when the embedding carries a
    finite factor (vector-space kind), the continuous shift is corrected
    and the finite operator acts on the attached finite vector.
    """
    out = apply_pi(generator_element(emb, j), f, allow_interpolation)
    fp = emb.finite_part
    fin = getattr(f, "finite_vector", None)
    if fp is not None and fin is not None:
        out = replace(out, finite_vector=_finite_operator(fp, j, fin))
    return out


def _tensor_values(f: SampledVector) -> np.ndarray:
    if f.finite_vector is None:
        return f.values
    extra = (1,) * f.finite_vector.ndim
    return f.values.reshape(f.values.shape + extra) * f.finite_vector


def measure_commutation_phase(emb: EmbeddingMap, i: int, j: int, f: SampledVector,
                              threshold: float = PHASE_MASK_THRESHOLD) -> complex:
    """Measured commutation phase of generators U_i and U_j.

    Returns the pointwise ratio of the word U_j U_i (U_j acts first) to
    the word U_i U_j, averaged over grid points whose reference magnitude
    exceeds ``threshold``. For a valid embedding this equals
    e^{2 pi i theta_ij}.
    """
    ji = apply_generator(emb, i, apply_generator(emb, j, f))
    ij = apply_generator(emb, j, apply_generator(emb, i, f))
    num = _tensor_values(ji)
    den = _tensor_values(ij)
    mask = np.abs(den) > threshold
    if not mask.any():
        raise DegenerateTestVector("all grid magnitudes below the phase threshold")
    return complex(np.mean(num[mask] / den[mask]))


@dataclass(frozen=True)
class ConnectionSet:
    """Constant-curvature connection coefficients for one embedding.

    ``matrix`` is the 4x4 coefficient table: row i defines
    nabla_i = -2 pi i (multiplier coefficients . coordinates)
              + (derivative coefficients . d/ds).
    Vector-space kind: coordinates (s1, s2), derivatives (d/ds1, d/ds2).
    Lattice kind: coordinates (s, n1, n2), a single derivative d/ds.
    """

    kind: EmbeddingKind
    matrix: np.ndarray

    @property
    def multiplier(self) -> np.ndarray:
        cut = 2 if self.kind is EmbeddingKind.VECTOR_SPACE else 3
        return self.matrix[:, :cut]

    @property
    def derivative(self) -> np.ndarray:
        cut = 2 if self.kind is EmbeddingKind.VECTOR_SPACE else 3
        return self.matrix[:, cut:]


def build_connections(emb: EmbeddingMap) -> ConnectionSet:
    """Connection coefficients: the inverse of the embedding data.

    Vector-space kind: the full inverse of the 4x4 map. Lattice kind: rows
    solving (coefficients . first-four-rows-of-the-map) = identity, which
    embeds the inverse of the integer block.
    """
    if emb.kind is EmbeddingKind.VECTOR_SPACE:
        a = np.linalg.inv(emb.entries)
        return ConnectionSet(emb.kind, a)
    m = emb.m
    det = int(m[0, 0]) * int(m[1, 1]) - int(m[0, 1]) * int(m[1, 0])
    if det == 0:
        raise SingularIntegerMatrix("det(m) = 0")
    b = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=float) / det
    mat = np.zeros((4, 4))
    mat[0, 0] = 1.0 / emb.theta1
    mat[1, 3] = 1.0
    mat[2, 1:3] = b[0]
    mat[3, 1:3] = b[1]
    return ConnectionSet(emb.kind, mat)


def _require_closed(f) -> ClosedFormVector:
    if isinstance(f, ClosedFormVector):
        return f
    if isinstance(f, SampledVector) and f.source is not None:
        return f.source
    raise UnsupportedVector("residual measurement needs a closed-form backed vector")


def _fd4(evaluate, coords, axis: int, step: float) -> np.ndarray:
    """Order-4 central difference along one continuous coordinate."""
    def shifted(mult):
        moved = list(coords)
        moved[axis] = coords[axis] + mult * step
        return evaluate(*moved)

    return (-shifted(2.0) + 8.0 * shifted(1.0) - 8.0 * shifted(-1.0) + shifted(-2.0)) / (12.0 * step)


def _apply_connection(conn: ConnectionSet, i: int, evaluate, coords, step: float) -> np.ndarray:
    mult = conn.multiplier[i - 1]
    deriv = conn.derivative[i - 1]
    linear = sum(c * coord for c, coord in zip(mult, coords) if c != 0.0)
    out = -2j * math.pi * linear * evaluate(*coords)
    for d, c in enumerate(deriv):
        if c != 0.0:
            out = out + c * _fd4(evaluate, coords, d, step)
    return out


def _probe_coords(emb: EmbeddingMap, f: ClosedFormVector, n_probe: int = 41):
    if emb.kind is EmbeddingKind.LATTICE:
        s = np.linspace(-2.5, 2.5, 5 * n_probe)
        n = np.arange(-2, 3)
        return np.ix_(s, n, n)
    s = np.linspace(-2.0, 2.0, n_probe)
    return np.ix_(s, s)


def connection_commutator_residual(emb: EmbeddingMap, i: int, j: int, f,
                                   step: float = 1e-3, probes=None) -> float:
    """Sup-norm defect of [nabla_i, U_j] = 2 pi i delta_ij U_j on a probe grid.

    Derivatives use order-4 central differences with the given step; the
    defect is normalized by max |U_j f| over the probes. The finite factor
    is outside the scope of this contract and is ignored.
    """
    closed = _require_closed(f)
    conn = build_connections(emb)
    el = lattice_element(emb, np.eye(4, dtype=np.int64)[j - 1])
    uf = _transform_closed(el, closed)
    coords = probes if probes is not None else _probe_coords(emb, closed)

    term1 = _apply_connection(conn, i, uf.evaluate, coords, step)

    def nabla_f(*pts):
        return _apply_connection(conn, i, closed.evaluate, pts, step)

    shifted = list(coords)
    if emb.kind is EmbeddingKind.LATTICE:
        shifted[0] = coords[0] + el.w1
        shifted[1] = coords[1] + el.m_shift[0]
        shifted[2] = coords[2] + el.m_shift[1]
        s, n1, n2 = coords
        t = el.t_lift
        phase = np.exp(2j * math.pi * (el.w2 * s + t[0] * n1 + t[1] * n2)
                       + 1j * math.pi * (el.w1 * el.w2
                                         + el.m_shift[0] * t[0] + el.m_shift[1] * t[1]))
    else:
        shifted[0] = coords[0] + el.m_part[0]
        shifted[1] = coords[1] + el.m_part[1]
        s1, s2 = coords
        x2 = el.dual_part
        phase = np.exp(2j * math.pi * (x2[0] * s1 + x2[1] * s2)
                       + 1j * math.pi * float(el.m_part @ x2))
    term2 = phase * nabla_f(*shifted)

    uf_vals = uf.evaluate(*coords)
    defect = term1 - term2
    if i == j:
        defect = defect - 2j * math.pi * uf_vals
    denom = float(np.max(np.abs(uf_vals)))
    if denom < PHASE_MASK_THRESHOLD:
        raise DegenerateTestVector("test vector vanishes on the probe grid")
    return float(np.max(np.abs(defect)) / denom)


def representation_defect(emb: EmbeddingMap, g: LatticeElement, h: LatticeElement,
                          f: SampledVector) -> float:
    """Sup-norm of pi_g pi_h f - alpha(g, h) pi_{g+h} f, relative to max |f|.

    This is the operator-composition oracle behind the cocycle formula.
    """
    from .embedding import cocycle_phase, element_add

    lhs = apply_pi(g, apply_pi(h, f))
    rhs = apply_pi(element_add(emb, g, h), f)
    alpha = cocycle_phase(g, h)
    denom = float(np.max(np.abs(f.values)))
    if denom == 0.0:
        raise DegenerateTestVector("zero test vector")
    return float(np.max(np.abs(lhs.values - alpha * rhs.values)) / denom)
