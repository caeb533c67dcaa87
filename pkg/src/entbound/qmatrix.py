"""Dense complex Hermitian linear algebra and distance measures between density matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
DEFAULT_SUPPORT_TOL = 1e-12
DEFAULT_MASS_TOL = 1e-9

INFINITE = math.inf


class InvariantViolation(ValueError):
    """A state invariant failed; carries the invariant name and the measured deviation."""

    def __init__(self, invariant: str, deviation: float, message: str | None = None):
        self.invariant = invariant
        self.deviation = float(deviation)
        super().__init__(
            message or f"invariant '{invariant}' violated, deviation {deviation:.3e}"
        )


class EigenSolverError(RuntimeError):
    """The eigensolver failed to converge; the message carries condition diagnostics."""


class MeasureKind(Enum):
    """Selector for the distance between states: squared Bures metric or relative entropy."""

    BURES_SQUARED = "bures2"
    RELATIVE_ENTROPY = "relent"


def as_array(state) -> np.ndarray:
    """Accept a DensityMatrix or a bare ndarray and return the complex matrix."""
    if isinstance(state, DensityMatrix):
        return state.entries
    return np.asarray(state, dtype=complex)


def hermitize(m: np.ndarray) -> np.ndarray:
    """(M + M†)/2, also applied axis-wise to stacks of matrices."""
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


@dataclass(frozen=True)
class DensityMatrix:
    """A d x d complex density matrix with its tensor-factor dimensions.

    `entries` is Hermitian, PSD and unit-trace within the module tolerances;
    `local_dims` are the party dimensions, party 1 most significant, so the
    basis label i1 i2 ... maps to row index sum_j i_j * prod_{k>j} d_k.
    """

    entries: np.ndarray
    local_dims: tuple[int, ...]

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        dims = tuple(int(d) for d in self.local_dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"local dims must be positive, got {dims}")
        if math.prod(dims) != arr.shape[0]:
            raise InvariantViolation(
                "local_dims", abs(math.prod(dims) - arr.shape[0]),
                f"product of local_dims {dims} != dim {arr.shape[0]}",
            )
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "local_dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_parties(self) -> int:
        return len(self.local_dims)

    def validate(self) -> "DensityMatrix":
        """Check hermiticity, unit trace and positivity; raise InvariantViolation otherwise."""
        dev = float(np.max(np.abs(self.entries - self.entries.conj().T)))
        if dev > HERMITICITY_TOL:
            raise InvariantViolation("hermiticity", dev)
        tr_dev = abs(float(np.trace(self.entries).real) - 1.0)
        if tr_dev > TRACE_TOL or abs(float(np.trace(self.entries).imag)) > TRACE_TOL:
            raise InvariantViolation("trace", tr_dev)
        min_eig = float(np.linalg.eigvalsh(hermitize(self.entries))[0])
        if min_eig < -PSD_TOL:
            raise InvariantViolation("positivity", -min_eig)
        return self

    @classmethod
    def from_array(cls, entries, local_dims) -> "DensityMatrix":
        """Build and validate a state from raw entries."""
        return cls(entries, tuple(local_dims)).validate()

    @classmethod
    def pure(cls, vector, local_dims) -> "DensityMatrix":
        """Rank-1 projector |psi><psi| of a unit vector."""
        v = np.asarray(vector, dtype=complex).reshape(-1)
        return cls.from_array(np.outer(v, v.conj()), local_dims)

    @classmethod
    def maximally_mixed(cls, local_dims) -> "DensityMatrix":
        d = math.prod(local_dims)
        return cls(np.eye(d, dtype=complex) / d, tuple(local_dims))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and unitary eigenvector columns of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_eig(matrix) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, symmetrized as (M + M†)/2 first.

    The input must be Hermitian within 1e-8; ascending eigenvalues and
    orthonormal eigenvector columns are returned.
    """
    m = as_array(matrix)
    asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if asym > 1e-8:
        raise InvariantViolation("hermiticity", asym, "matrix is not Hermitian within 1e-8")
    h = hermitize(m)
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        norm = float(np.linalg.norm(h))
        finite = bool(np.all(np.isfinite(h)))
        raise EigenSolverError(
            f"eigensolver failed on {h.shape[0]}x{h.shape[1]} matrix "
            f"(Frobenius norm {norm:.3e}, all finite: {finite}): {exc}"
        ) from exc
    return SpectralDecomposition(vals, vecs)


def matrix_sqrt_psd(matrix) -> np.ndarray:
    """Principal square root V sqrt(max(lam, 0)) V† of a PSD Hermitian matrix.

    Eigenvalues in [-1e-10, 0) are treated as rounding noise and clipped to
    zero; anything below -1e-10 is rejected as not PSD.
    """
    dec = hermitian_eig(matrix)
    min_eig = float(dec.eigenvalues[0])
    if min_eig < -PSD_TOL:
        raise InvariantViolation("positivity", -min_eig, "not PSD")
    roots = np.sqrt(np.clip(dec.eigenvalues, 0.0, None))
    return (dec.eigenvectors * roots) @ dec.eigenvectors.conj().T


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity F = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to [0, 1]."""
    a, b = as_array(rho), as_array(sigma)
    _check_same_dim(a, b)
    root = matrix_sqrt_psd(a)
    inner = hermitize(root @ b @ root)
    vals = np.linalg.eigvalsh(inner)
    f = float(np.sum(np.sqrt(np.clip(vals, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def bures_squared(rho, sigma) -> float:
    """Squared Bures metric 2 - 2 sqrt(F(rho, sigma))."""
    return 2.0 - 2.0 * math.sqrt(fidelity(rho, sigma))


def relative_entropy(
    rho,
    sigma,
    support_tol: float = DEFAULT_SUPPORT_TOL,
    mass_tol: float = DEFAULT_MASS_TOL,
) -> float:
    """Quantum relative entropy tr[rho (log2 rho - log2 sigma)], in bits.

    rho-eigenvalues at or below `support_tol` contribute nothing (0 log 0 = 0).
    sigma-eigenvalues at or below `support_tol` span a null projector P: when
    tr(rho P) exceeds `mass_tol` the divergence is infinite (math.inf);
    otherwise those eigenvalues are floored at `support_tol` and the finite
    value is returned, never below 0.
    """
    a, b = as_array(rho), as_array(sigma)
    _check_same_dim(a, b)
    rho_vals = hermitian_eig(a).eigenvalues
    pos = rho_vals > support_tol
    rho_log_trace = float(np.sum(rho_vals[pos] * np.log2(rho_vals[pos])))

    dec = hermitian_eig(b)
    weights = np.real(np.sum(dec.eigenvectors.conj() * (a @ dec.eigenvectors), axis=0))
    null = dec.eigenvalues <= support_tol
    if float(np.sum(weights[null])) > mass_tol:
        return INFINITE
    floored = np.maximum(dec.eigenvalues, support_tol)
    cross = float(np.sum(weights * np.log2(floored)))
    return max(rho_log_trace - cross, 0.0)


def distance(rho, sigma, kind: MeasureKind, **kwargs) -> float:
    """Dispatch to the selected distance measure."""
    if kind is MeasureKind.BURES_SQUARED:
        return bures_squared(rho, sigma)
    if kind is MeasureKind.RELATIVE_ENTROPY:
        return relative_entropy(rho, sigma, **kwargs)
    raise ValueError(f"unknown measure kind {kind!r}")


def hs_inner(a, b) -> float:
    """Hilbert-Schmidt pairing Re tr(A B); real for Hermitian inputs up to rounding."""
    x, y = as_array(a), as_array(b)
    _check_same_dim(x, y)
    return float(np.einsum("ij,ji->", x, y).real)


def partial_transpose(matrix, local_dims, parties) -> np.ndarray:
    """Transpose the given parties (0-based indices) of a multipartite matrix."""
    m = as_array(matrix)
    dims = tuple(int(d) for d in local_dims)
    n = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    for p in parties:
        axes[p], axes[n + p] = axes[n + p], axes[p]
    return t.transpose(axes).reshape(m.shape)


class TargetState:
    """Spectral data of the fixed target state, cached once per solver run.

    Holds the eigendecomposition, the matrix square root (for fidelity) and
    tr(rho log2 rho) (for relative entropy), which are invariant across the
    solver's line searches against varying second arguments.
    """

    def __init__(self, rho, support_tol: float = DEFAULT_SUPPORT_TOL):
        self.matrix = as_array(rho)
        self.support_tol = support_tol
        self.spectrum = hermitian_eig(self.matrix)
        if float(self.spectrum.eigenvalues[0]) < -PSD_TOL:
            raise InvariantViolation(
                "positivity", -float(self.spectrum.eigenvalues[0]), "target not PSD"
            )
        roots = np.sqrt(np.clip(self.spectrum.eigenvalues, 0.0, None))
        self.sqrt = (self.spectrum.eigenvectors * roots) @ self.spectrum.eigenvectors.conj().T
        vals = self.spectrum.eigenvalues
        pos = vals > support_tol
        self.rho_log_trace = float(np.sum(vals[pos] * np.log2(vals[pos])))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def distance_many(
        self,
        stack: np.ndarray,
        kind: MeasureKind,
        mass_tol: float = DEFAULT_MASS_TOL,
    ) -> np.ndarray:
        """Distances from the target to a (B, d, d) stack of states, batched."""
        stack = np.asarray(stack, dtype=complex)
        if kind is MeasureKind.BURES_SQUARED:
            inner = hermitize(self.sqrt @ stack @ self.sqrt)
            vals = np.linalg.eigvalsh(inner)
            f = np.sum(np.sqrt(np.clip(vals, 0.0, None)), axis=-1) ** 2
            return 2.0 - 2.0 * np.sqrt(np.clip(f, 0.0, 1.0))
        if kind is MeasureKind.RELATIVE_ENTROPY:
            vals, vecs = np.linalg.eigh(hermitize(stack))
            # weights[b, k] = <v_k| rho |v_k> for the k-th eigenvector of stack[b]
            weights = np.real(np.sum(vecs.conj() * (self.matrix @ vecs), axis=-2))
            null_mass = np.sum(np.where(vals <= self.support_tol, weights, 0.0), axis=-1)
            floored = np.maximum(vals, self.support_tol)
            cross = np.sum(weights * np.log2(floored), axis=-1)
            out = np.maximum(self.rho_log_trace - cross, 0.0)
            return np.where(null_mass > mass_tol, INFINITE, out)
        raise ValueError(f"unknown measure kind {kind!r}")

    def distance(self, sigma, kind: MeasureKind, mass_tol: float = DEFAULT_MASS_TOL) -> float:
        """Distance from the target to a single state, using the cached data."""
        one = as_array(sigma)[np.newaxis]
        return float(self.distance_many(one, kind, mass_tol=mass_tol)[0])
