import cmath
import math

import numpy as np
import pytest

from conftest import GOLDEN_DIR, load_golden, save_golden
from nctheta.embedding import (
    cocycle_phase,
    enumerate_indices,
    lattice_element,
)
from nctheta.errors import TruncationTooSmall, UnsupportedVector
from nctheta.qtheta import (
    additivity_gap,
    basis_multiply,
    c_factor,
    inner_product_closed,
    inner_product_oracle,
    phase_identity_max_residual,
    quantum_theta_series,
    series_tail_bound,
    translation_factor,
    verify_consistency_condition,
    verify_functional_equation,
)
from nctheta.special import jacobi_theta, mode_factor
from nctheta.structures import theta_vector


@pytest.fixture(scope="module")
def lattice_series(lattice_emb, lattice_structure):
    return quantum_theta_series(lattice_emb, lattice_structure, radius=4)


@pytest.fixture(scope="module")
def vector_series(vector_emb, vector_structure):
    return quantum_theta_series(vector_emb, vector_structure, radius=4)


class TestInnerProductClosed:
    def test_zero_element_norm(self, lattice_emb, lattice_structure):
        f = theta_vector(lattice_structure)
        got = inner_product_closed(f, lattice_element(lattice_emb, [0, 0, 0, 0]))
        expected = 0.5 * jacobi_theta(5j, 0.0) ** 2
        assert got == pytest.approx(expected, abs=1e-15)

    def test_third_generator(self, lattice_emb, lattice_structure):
        f = theta_vector(lattice_structure)
        got = inner_product_closed(f, lattice_element(lattice_emb, [0, 0, 1, 0]))
        expected = mode_factor(0.0, 1, 0.4) * mode_factor(0.3, 0, 0.4) * 0.5
        assert got == pytest.approx(expected, abs=1e-18)

    def test_vector_zero(self, vector_emb, vector_structure):
        f = theta_vector(vector_structure)
        got = inner_product_closed(f, lattice_element(vector_emb, [0, 0, 0, 0]))
        assert got == pytest.approx(0.5)

    def test_rejects_noncanonical_vector(self, lattice_emb, lattice_structure):
        from dataclasses import replace

        f = replace(theta_vector(lattice_structure), amplitude=2.0 + 0j)
        with pytest.raises(UnsupportedVector):
            inner_product_closed(f, lattice_element(lattice_emb, [0, 0, 0, 0]))


class TestOracleEquivalence:
    def test_lattice_radius2(self, lattice_emb, lattice_structure):
        f = theta_vector(lattice_structure)
        for k in enumerate_indices(2):
            h = lattice_element(lattice_emb, k)
            closed = inner_product_closed(f, h)
            oracle = inner_product_oracle(f, h, 1e-10)
            assert abs(closed - oracle) <= max(1e-8 * abs(oracle), 1e-15), k

    def test_vector_radius1(self, vector_emb, vector_structure):
        f = theta_vector(vector_structure)
        for k in enumerate_indices(1):
            h = lattice_element(vector_emb, k)
            closed = inner_product_closed(f, h)
            oracle = inner_product_oracle(f, h, 1e-10)
            assert abs(closed - oracle) <= max(1e-8 * abs(oracle), 1e-15), k

    def test_large_mode_decay(self, lattice_emb, lattice_structure):
        # coefficients decay like e^{-pi |m|^2 / theta2}; both routes agree
        f = theta_vector(lattice_structure)
        h = lattice_element(lattice_emb, [0, 0, 3, 0])
        closed = inner_product_closed(f, h)
        oracle = inner_product_oracle(f, h, 1e-12)
        assert abs(closed) < 1e-9
        assert abs(closed - oracle) <= 1e-6 * abs(closed)

    def test_conjugate_symmetry(self, lattice_emb, lattice_structure):
        # pi_{-h} = pi_h^{-1} = pi_h^* here since alpha(h, -h) = 1,
        # so the coefficient at -h is the conjugate of the one at h
        f = theta_vector(lattice_structure)
        rng = np.random.default_rng(21)
        for _ in range(10):
            k = rng.integers(-2, 3, size=4)
            h = lattice_element(lattice_emb, k)
            neg = lattice_element(lattice_emb, -k)
            assert cocycle_phase(h, neg) == pytest.approx(1.0)
            a = inner_product_oracle(f, h, 1e-11)
            b = inner_product_oracle(f, neg, 1e-11)
            assert b == pytest.approx(np.conj(a), abs=1e-12)


class TestSeries:
    def test_zero_coefficients(self, lattice_series, vector_series):
        assert vector_series.coefficient([0, 0, 0, 0]) == 1.0
        b0 = lattice_series.coefficient([0, 0, 0, 0])
        assert abs(b0 - jacobi_theta(5j, 0.0) ** 2) <= 1e-12
        assert abs(b0.imag) <= 1e-16

    def test_modulation_coefficient(self, lattice_series):
        # H((0,1),(0,1)) = 1/(2 Im T) = 0.25... times pi/2 in the exponent
        got = lattice_series.coefficient([0, 1, 0, 0])
        expected = jacobi_theta(5j, 0.0) ** 2 * cmath.exp(-math.pi / 4)
        assert got == pytest.approx(expected, abs=1e-15)

    def test_normalizations(self, lattice_series, vector_series):
        assert lattice_series.normalization == pytest.approx(0.5)
        assert vector_series.normalization == pytest.approx(0.5)

    def test_reassembles_inner_product(self, lattice_series, lattice_structure):
        f = theta_vector(lattice_structure)
        for k in enumerate_indices(2):
            h = lattice_element(lattice_series.embedding, k)
            closed = inner_product_closed(f, h)
            assembled = lattice_series.normalization * lattice_series.coefficient(k)
            assert abs(assembled - closed) <= 1e-12 * max(abs(closed), 1e-30)

    def test_oracle_matches_scaled_coefficients(self, lattice_series, lattice_structure):
        f = theta_vector(lattice_structure)
        rng = np.random.default_rng(4)
        for _ in range(12):
            k = rng.integers(-2, 3, size=4)
            h = lattice_element(lattice_series.embedding, k)
            oracle = inner_product_oracle(f, h, 1e-10)
            scaled = lattice_series.normalization * lattice_series.coefficient(k)
            assert abs(scaled - oracle) <= max(1e-8 * abs(oracle), 1e-15)

    def test_tail_bound_documented_radius(self, lattice_series, vector_series):
        # lattice decay is fast (documented radius 6); the plane series decays
        # like e^{-(pi/2) theta2^2 k3^2} along the slowest axis, radius ~12
        for series, cap in ((lattice_series, 6), (vector_series, 12)):
            r = series.radius
            while series_tail_bound(series, r) >= 1e-12:
                r += 1
            assert r <= cap
            assert series_tail_bound(series, r) < 1e-12

    def test_tail_bound_dominates_actual_tail(self, lattice_emb, lattice_structure):
        # the estimate must bound the directly summed coefficient ring
        small = quantum_theta_series(lattice_emb, lattice_structure, radius=2)
        big = quantum_theta_series(lattice_emb, lattice_structure, radius=4)
        ring = sum(abs(c) for k, c in big.coefficients.items()
                   if max(abs(v) for v in k) > 2)
        assert ring <= series_tail_bound(small)

    def test_radius_validation(self, lattice_emb, lattice_structure):
        with pytest.raises(ValueError):
            quantum_theta_series(lattice_emb, lattice_structure, radius=0)

    def test_coefficient_decay_fit(self, lattice_series, vector_series):
        # |coefficient(k)| <= e^{-c |k|^2} with a positive fitted rate
        for series in (lattice_series, vector_series):
            rates = [-math.log(abs(c)) / sum(v * v for v in k)
                     for k, c in series.coefficients.items() if any(k)]
            assert min(rates) > 0


class TestFactors:
    def test_c_factor_matches_coefficients(self, lattice_series, vector_series):
        for series in (lattice_series, vector_series):
            for k in ([0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 1, 0], [2, -1, 0, 1]):
                g = lattice_element(series.embedding, k)
                assert c_factor(series, g) == pytest.approx(
                    series.coefficient(k), abs=1e-15)

    def test_translation_by_zero(self, lattice_series, vector_series):
        zero = lattice_element(lattice_series.embedding, [0, 0, 0, 0])
        h = lattice_element(lattice_series.embedding, [1, 2, 0, -1])
        # the lattice-kind zero translation rescales by 1/C(0), not 1
        got = translation_factor(lattice_series, zero, h)
        assert got == pytest.approx(1.0 / lattice_series.coefficient([0, 0, 0, 0]))
        zv = lattice_element(vector_series.embedding, [0, 0, 0, 0])
        hv = lattice_element(vector_series.embedding, [1, 2, 0, -1])
        assert translation_factor(vector_series, zv, hv) == pytest.approx(1.0)

    def test_lattice_quotient_construction(self, lattice_series):
        emb = lattice_series.embedding
        rng = np.random.default_rng(9)
        for _ in range(10):
            kg, kh = rng.integers(-2, 3, size=(2, 4))
            g, h = lattice_element(emb, kg), lattice_element(emb, kh)
            lhs = (c_factor(lattice_series, g) * c_factor(lattice_series, h)
                   * cocycle_phase(g, h) * translation_factor(lattice_series, g, h))
            rhs = c_factor(lattice_series, lattice_element(emb, kg + kh))
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

    def test_basis_multiply(self, lattice_emb):
        phase, idx = basis_multiply([1, 0, 0, 0], [0, 1, 0, 0], lattice_emb)
        assert phase == pytest.approx(1j)
        assert idx == (1, 1, 0, 0)
        phase0, idx0 = basis_multiply([2, -1, 3, 0], [0, 0, 0, 0], lattice_emb)
        assert phase0 == pytest.approx(1.0)
        assert idx0 == (2, -1, 3, 0)


class TestFunctionalEquation:
    def test_vector_generators(self, vector_series):
        for j in range(4):
            g = lattice_element(vector_series.embedding, np.eye(4, dtype=int)[j])
            rep = verify_functional_equation(vector_series, g)
            assert rep.passed
            assert rep.max_residual <= 1e-9

    def test_lattice_generators(self, lattice_series):
        for j in range(4):
            g = lattice_element(lattice_series.embedding, np.eye(4, dtype=int)[j])
            rep = verify_functional_equation(lattice_series, g)
            assert rep.passed
            assert rep.max_residual <= 1e-12

    def test_zero_translation(self, lattice_series, vector_series):
        for series in (lattice_series, vector_series):
            g = lattice_element(series.embedding, [0, 0, 0, 0])
            rep = verify_functional_equation(series, g)
            assert rep.max_residual <= 1e-12

    def test_interior_window_counts(self, vector_series):
        g = lattice_element(vector_series.embedding, [1, 0, 0, 0])
        rep = verify_functional_equation(vector_series, g)
        assert len(rep.residuals) == 7 ** 4

    def test_radius_guard(self, vector_series):
        g = lattice_element(vector_series.embedding, [3, 0, 0, 0])
        with pytest.raises(TruncationTooSmall):
            verify_functional_equation(vector_series, g)


class TestConsistency:
    def test_phase_identity_vector(self, vector_emb, vector_structure):
        assert phase_identity_max_residual(vector_emb, vector_structure, 2) <= 1e-10

    def test_phase_identity_fails_on_lattice(self, lattice_emb, lattice_structure):
        # the pairing sees the discrete part, the Hermitian form does not
        assert phase_identity_max_residual(lattice_emb, lattice_structure, 1) > 0.1

    def test_condition_reports(self, lattice_series, vector_series):
        rng = np.random.default_rng(31)
        for series, tol in ((vector_series, 1e-10), (lattice_series, 1e-12)):
            for _ in range(25):
                kg, kh = rng.integers(-2, 3, size=(2, 4))
                rep = verify_consistency_condition(
                    series,
                    lattice_element(series.embedding, kg),
                    lattice_element(series.embedding, kh))
                assert rep.passed
                assert rep.max_residual <= tol

    def test_zero_pair(self, vector_series):
        z = lattice_element(vector_series.embedding, [0, 0, 0, 0])
        rep = verify_consistency_condition(vector_series, z, z)
        assert rep.max_residual <= 1e-14


class TestAdditivity:
    def test_vector_always_additive(self, vector_series):
        rng = np.random.default_rng(77)
        emb = vector_series.embedding
        for _ in range(100):
            k1, k2, k3 = rng.integers(-2, 3, size=(3, 4))
            gap = additivity_gap(vector_series,
                                 lattice_element(emb, k1),
                                 lattice_element(emb, k2),
                                 lattice_element(emb, k3))
            assert gap <= 1e-12

    def test_lattice_witness_gap(self, lattice_series, regen_golden, lattice_config):
        emb = lattice_series.embedding
        g = lattice_element(emb, [0, 0, 1, 0])
        h = lattice_element(emb, [0, 0, 0, 1])
        gap = additivity_gap(lattice_series, g, g, h)
        assert gap > 0.01
        payload = {"config_hash": lattice_config.content_hash(),
                   "witness": "g1=g2=(0,0,1,0) h=(0,0,0,1)",
                   "gap": gap}
        name = "additivity_witness.json"
        if regen_golden or not (GOLDEN_DIR / name).exists():
            save_golden(name, payload)
        golden = load_golden(name)
        assert golden["config_hash"] == payload["config_hash"]
        assert gap == pytest.approx(golden["gap"], rel=1e-12)

    def test_pure_continuous_directions_measured(self, lattice_series):
        # no claim either way; the gaps are measured and must be finite
        emb = lattice_series.embedding
        rng = np.random.default_rng(13)
        gaps = []
        for _ in range(10):
            ks = np.zeros((3, 4), dtype=np.int64)
            ks[:2, :2] = rng.integers(-2, 3, size=(2, 2))
            ks[2] = rng.integers(-2, 3, size=4)
            g1, g2, h = (lattice_element(emb, k) for k in ks)
            gaps.append(additivity_gap(lattice_series, g1, g2, h))
        assert all(math.isfinite(g) for g in gaps)
