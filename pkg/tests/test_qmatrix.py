import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entbound.qmatrix import (
    DensityMatrix,
    InvariantViolation,
    MeasureKind,
    TargetState,
    bures_squared,
    distance,
    fidelity,
    hermitian_eig,
    hs_inner,
    matrix_sqrt_psd,
    partial_transpose,
    relative_entropy,
)

from helpers import naive_fidelity, naive_relative_entropy, random_density, random_pure

seeds = st.integers(min_value=0, max_value=10**6)


def ket(i, d=2):
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


class TestDensityMatrix:
    def test_valid_state_passes(self):
        dm = DensityMatrix(np.eye(2) / 2, (2,))
        assert dm.validate() is dm
        assert dm.dim == 2 and dm.n_parties == 1

    def test_local_dims_product_must_match(self):
        with pytest.raises((InvariantViolation, ValueError)):
            DensityMatrix(np.eye(4) / 4, (2, 3))

    def test_hermiticity_violation_named_with_deviation(self):
        m = np.eye(2, dtype=complex) / 2
        m[0, 1] = 1e-3
        with pytest.raises(InvariantViolation) as exc:
            DensityMatrix(m, (2,)).validate()
        assert exc.value.invariant == "hermiticity"
        assert exc.value.deviation == pytest.approx(1e-3, rel=1e-6)

    def test_trace_violation_named_with_deviation(self):
        with pytest.raises(InvariantViolation) as exc:
            DensityMatrix(np.eye(2) * 0.45, (2,)).validate()
        assert exc.value.invariant == "trace"
        assert exc.value.deviation == pytest.approx(0.1, rel=1e-9)

    def test_negative_eigenvalue_rejected(self):
        m = np.diag([1.2, -0.2]).astype(complex)
        with pytest.raises(InvariantViolation) as exc:
            DensityMatrix(m, (2,)).validate()
        assert exc.value.invariant == "positivity"

    def test_entries_read_only(self):
        dm = DensityMatrix.maximally_mixed((2, 2))
        with pytest.raises(ValueError):
            dm.entries[0, 0] = 5.0

    def test_pure_constructor(self):
        dm = DensityMatrix.pure([1, 0, 0, 0], (2, 2))
        assert dm.entries[0, 0] == 1.0
        assert np.trace(dm.entries @ dm.entries).real == pytest.approx(1.0)


class TestHermitianEig:
    def test_identity(self):
        dec = hermitian_eig(np.eye(2, dtype=complex))
        assert np.allclose(dec.eigenvalues, [1.0, 1.0])

    def test_diagonal(self):
        dec = hermitian_eig(np.diag([0.25, 0.75]).astype(complex))
        assert np.allclose(dec.eigenvalues, [0.25, 0.75])
        assert np.allclose(np.abs(dec.eigenvectors), np.eye(2))

    def test_pauli_x(self):
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        dec = hermitian_eig(x)
        assert np.allclose(dec.eigenvalues, [-1.0, 1.0])
        minus, plus = dec.eigenvectors[:, 0], dec.eigenvectors[:, 1]
        assert abs(abs(minus @ np.array([1, -1]) / np.sqrt(2)) - 1) < 1e-10
        assert abs(abs(plus @ np.array([1, 1]) / np.sqrt(2)) - 1) < 1e-10

    def test_rejects_non_hermitian(self):
        m = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(InvariantViolation):
            hermitian_eig(m)

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_reconstruction_and_orthonormality(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        m = random_density(rng, d) * rng.uniform(0.5, 2.0)
        dec = hermitian_eig(m)
        recon = (dec.eigenvectors * dec.eigenvalues) @ dec.eigenvectors.conj().T
        assert np.linalg.norm(recon - m) <= 1e-9 * d
        gram = dec.eigenvectors.conj().T @ dec.eigenvectors
        assert np.max(np.abs(gram - np.eye(d))) <= 1e-10
        assert np.all(np.diff(dec.eigenvalues) >= 0)


class TestMatrixSqrt:
    def test_maximally_mixed_qubit(self):
        root = matrix_sqrt_psd(np.eye(2) / 2)
        assert np.allclose(root, np.eye(2) / np.sqrt(2))

    def test_projector_is_own_root(self):
        p = np.outer(ket(0), ket(0).conj())
        assert np.allclose(matrix_sqrt_psd(p), p)

    def test_diagonal(self):
        root = matrix_sqrt_psd(np.diag([0.25, 0.75]))
        assert np.allclose(root, np.diag([0.5, np.sqrt(0.75)]))

    def test_not_psd_rejected(self):
        with pytest.raises(InvariantViolation, match="not PSD"):
            matrix_sqrt_psd(np.diag([1.0, -1e-3]))

    def test_small_negative_clipped(self):
        root = matrix_sqrt_psd(np.diag([1.0, -5e-11]))
        assert root[1, 1].real == 0.0

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_square_reproduces(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 8))
        m = random_density(rng, d)
        root = matrix_sqrt_psd(m)
        assert np.linalg.norm(root @ root - m) <= 1e-8 * d


class TestFidelity:
    def test_self_fidelity_is_one(self):
        rho = random_density(np.random.default_rng(3), 4)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_pure_states(self):
        assert fidelity(np.outer(ket(0), ket(0)), np.outer(ket(1), ket(1))) == 0.0

    def test_pure_vs_maximally_mixed(self):
        assert fidelity(np.outer(ket(0), ket(0)), np.eye(2) / 2) == pytest.approx(0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(np.eye(2) / 2, np.eye(3) / 3)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_symmetry_and_bounds(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        a, b = random_density(rng, d), random_density(rng, d)
        f_ab, f_ba = fidelity(a, b), fidelity(b, a)
        assert abs(f_ab - f_ba) <= 1e-8
        assert 0.0 <= f_ab <= 1.0

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_agrees_with_naive(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        a, b = random_density(rng, d), random_density(rng, d)
        assert fidelity(a, b) == pytest.approx(naive_fidelity(a, b), abs=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_pure_state_shortcut(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        psi = random_pure(rng, d)
        sigma = random_density(rng, d)
        expected = float(np.real(psi.conj() @ sigma @ psi))
        assert fidelity(np.outer(psi, psi.conj()), sigma) == pytest.approx(expected, abs=1e-9)

    def test_unity_only_for_equal_states(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            a, b = random_density(rng, 3), random_density(rng, 3)
            if fidelity(a, b) >= 1.0 - 1e-12:
                assert np.linalg.norm(a - b) <= 1e-6


class TestBures:
    def test_zero_for_identical(self):
        rho = random_density(np.random.default_rng(0), 3)
        assert bures_squared(rho, rho) == pytest.approx(0.0, abs=1e-8)

    def test_two_for_orthogonal(self):
        assert bures_squared(np.outer(ket(0), ket(0)), np.outer(ket(1), ket(1))) == 2.0

    def test_pure_vs_mixed(self):
        got = bures_squared(np.outer(ket(0), ket(0)), np.eye(2) / 2)
        assert got == pytest.approx(2 - np.sqrt(2), abs=1e-12)

    def test_monotone_transform_of_fidelity(self):
        rng = np.random.default_rng(17)
        rho = random_density(rng, 4)
        pairs = [(random_density(rng, 4), random_density(rng, 4)) for _ in range(10)]
        for s1, s2 in pairs:
            f1, f2 = fidelity(rho, s1), fidelity(rho, s2)
            b1, b2 = bures_squared(rho, s1), bures_squared(rho, s2)
            if f1 > f2 + 1e-12:
                assert b1 < b2 + 1e-12


class TestRelativeEntropy:
    def test_zero_for_identical(self):
        rho = random_density(np.random.default_rng(1), 3)
        assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-9)

    def test_pure_vs_maximally_mixed_is_one_bit(self):
        rho = np.outer(ket(0), ket(0))
        assert relative_entropy(rho, np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)

    def test_support_violation_is_infinite(self):
        rho = np.outer(ket(0), ket(0))
        sigma = np.outer(ket(1), ket(1))
        assert relative_entropy(rho, sigma) == math.inf

    def test_rank_deficient_sigma_with_matching_support_is_finite(self):
        # sigma pure, rho equal to it: no mass outside the support
        psi = random_pure(np.random.default_rng(5), 4)
        p = np.outer(psi, psi.conj())
        assert relative_entropy(p, p) == pytest.approx(0.0, abs=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_klein_inequality(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        a, b = random_density(rng, d), random_density(rng, d)
        s = relative_entropy(a, b)
        assert s >= 0.0
        if s <= 1e-12:
            assert np.linalg.norm(a - b) <= 1e-6

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_agrees_with_naive(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        a, b = random_density(rng, d), random_density(rng, d)
        assert relative_entropy(a, b) == pytest.approx(naive_relative_entropy(a, b), abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            relative_entropy(np.eye(2) / 2, np.eye(3) / 3)


@pytest.mark.parametrize("kind", list(MeasureKind))
@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_segment_convexity(kind, seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    rho = random_density(rng, d)
    s0, s1 = random_density(rng, d), random_density(rng, d)  # full rank
    d0, d1 = distance(rho, s0, kind), distance(rho, s1, kind)
    for x in (0.0, 0.25, 0.5, 0.75, 1.0):
        mix = x * s0 + (1 - x) * s1
        assert distance(rho, mix, kind) <= x * d0 + (1 - x) * d1 + 1e-8


class TestDistanceDispatch:
    def test_bures_kind(self):
        a, b = np.eye(2) / 2, np.diag([0.7, 0.3])
        assert distance(a, b, MeasureKind.BURES_SQUARED) == bures_squared(a, b)

    def test_relent_kind(self):
        a, b = np.eye(2) / 2, np.diag([0.7, 0.3])
        assert distance(a, b, MeasureKind.RELATIVE_ENTROPY) == relative_entropy(a, b)

    def test_cli_names_match_variants(self):
        assert MeasureKind("bures2") is MeasureKind.BURES_SQUARED
        assert MeasureKind("relent") is MeasureKind.RELATIVE_ENTROPY


class TestHsInner:
    def test_identity_pair(self):
        assert hs_inner(np.eye(2), np.eye(2)) == pytest.approx(2.0)

    def test_orthogonal_projectors(self):
        assert hs_inner(np.outer(ket(0), ket(0)), np.outer(ket(1), ket(1))) == 0.0

    def test_diagonal_contraction(self):
        z = np.diag([1.0, -1.0])
        assert hs_inner(z, np.diag([0.8, 0.2])) == pytest.approx(0.6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            hs_inner(np.eye(2), np.eye(3))


class TestPartialTranspose:
    def test_involution(self):
        rng = np.random.default_rng(2)
        m = random_density(rng, 6)
        once = partial_transpose(m, (2, 3), [1])
        assert np.allclose(partial_transpose(once, (2, 3), [1]), m)

    def test_full_transpose_when_all_parties(self):
        rng = np.random.default_rng(4)
        m = random_density(rng, 4)
        assert np.allclose(partial_transpose(m, (2, 2), [0, 1]), m.T)

    def test_matches_reference(self):
        from helpers import partial_transpose_ref

        rng = np.random.default_rng(9)
        m = random_density(rng, 6)
        assert np.allclose(partial_transpose(m, (2, 3), [1]), partial_transpose_ref(m, (2, 3)))


class TestTargetStateCache:
    """The batched line-search path must agree with the plain functions."""

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_batched_bures_matches_plain(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 6))
        rho = random_density(rng, d)
        target = TargetState(rho)
        stack = np.stack([random_density(rng, d) for _ in range(7)])
        got = target.distance_many(stack, MeasureKind.BURES_SQUARED)
        want = [bures_squared(rho, s) for s in stack]
        assert np.allclose(got, want, atol=1e-10)

    @settings(max_examples=10, deadline=None)
    @given(seeds)
    def test_batched_relent_matches_plain(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 6))
        rho = random_density(rng, d)
        target = TargetState(rho)
        stack = np.stack([random_density(rng, d) for _ in range(7)])
        got = target.distance_many(stack, MeasureKind.RELATIVE_ENTROPY)
        want = [relative_entropy(rho, s) for s in stack]
        assert np.allclose(got, want, atol=1e-10)

    def test_batched_relent_infinite_case(self):
        rho = np.outer(ket(0), ket(0))
        sigma = np.outer(ket(1), ket(1))
        got = TargetState(rho).distance_many(np.stack([sigma]), MeasureKind.RELATIVE_ENTROPY)
        assert got[0] == math.inf
