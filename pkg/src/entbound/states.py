"""Constructors for the benchmark state families.

Basis convention throughout: party 1 is the most significant tensor factor,
so the basis string |i1 i2 ... in> maps to the flat row index
sum_j i_j * prod_{k>j} d_k (the C-order reshape of the tensor index grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extremal import ProductState, haar_vector
from .qmatrix import DensityMatrix


def ghz(n_parties: int) -> DensityMatrix:
    """GHZ state (|0...0> + |1...1>)/sqrt(2) on n qubits, as a density matrix."""
    if n_parties < 2:
        raise ValueError("GHZ state needs at least 2 parties")
    d = 2**n_parties
    psi = np.zeros(d, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return DensityMatrix.pure(psi, (2,) * n_parties)


def w_state(n_parties: int) -> DensityMatrix:
    """W state: equal amplitude 1/sqrt(n) on every weight-1 basis string."""
    if n_parties < 2:
        raise ValueError("W state needs at least 2 parties")
    d = 2**n_parties
    psi = np.zeros(d, dtype=complex)
    for j in range(n_parties):
        psi[1 << (n_parties - 1 - j)] = 1 / np.sqrt(n_parties)
    return DensityMatrix.pure(psi, (2,) * n_parties)


def horodecki(a: float) -> DensityMatrix:
    """The 3x3 bound entangled family with parameter 0 < a < 1.

    PPT for every a in (0,1) yet entangled; normalization 1/(8a+1).
    """
    a = float(a)
    if not 0 < a < 1:
        raise ValueError(f"parameter must be in the open interval (0,1), got {a}")
    u = (1 + a) / 2
    v = np.sqrt(1 - a * a) / 2
    m = np.array(
        [
            [a, 0, 0, 0, a, 0, 0, 0, a],
            [0, a, 0, 0, 0, 0, 0, 0, 0],
            [0, 0, a, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, a, 0, 0, 0, 0, 0],
            [a, 0, 0, 0, a, 0, 0, 0, a],
            [0, 0, 0, 0, 0, a, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, u, 0, v],
            [0, 0, 0, 0, 0, 0, 0, a, 0],
            [a, 0, 0, 0, a, 0, v, 0, u],
        ],
        dtype=complex,
    )
    return DensityMatrix(m / (8 * a + 1), (3, 3))


@dataclass(frozen=True)
class ChessboardParams:
    """Parameters of a 3x3 chessboard state.

    The six free parameters may be complex; s and t are fixed by the
    requirement that the resulting state stays PPT, which forces
    s = a c*/n* and t = a d*/m*. m and n must therefore be nonzero.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    m: complex
    n: complex

    def __post_init__(self):
        for field in ("m", "n"):
            if abs(getattr(self, field)) == 0:
                raise ValueError(f"chessboard parameter {field} must be nonzero")

    @property
    def s(self) -> complex:
        return self.a * np.conj(self.c) / np.conj(self.n)

    @property
    def t(self) -> complex:
        return self.a * np.conj(self.d) / np.conj(self.m)

    def vectors(self) -> list[np.ndarray]:
        """The four unnormalized kets, each listing its 9 amplitudes in order."""
        a, b, c, d, m, n = self.a, self.b, self.c, self.d, self.m, self.n
        return [
            np.array([m, 0, self.s, 0, n, 0, 0, 0, 0], dtype=complex),
            np.array([0, a, 0, b, 0, c, 0, 0, 0], dtype=complex),
            np.array([np.conj(n), 0, 0, 0, -np.conj(m), 0, self.t, 0, 0], dtype=complex),
            np.array([0, np.conj(b), 0, -np.conj(a), 0, 0, 0, d, 0], dtype=complex),
        ]

    @property
    def normalization(self) -> float:
        total = sum(float(np.real(v.conj() @ v)) for v in self.vectors())
        if total <= 0:
            raise ValueError("chessboard normalization must be positive")
        return 1.0 / total


def chessboard(params: ChessboardParams) -> DensityMatrix:
    """Chessboard state: normalized sum of the four rank-1 projectors."""
    m = np.zeros((9, 9), dtype=complex)
    for v in params.vectors():
        m += np.outer(v, v.conj())
    return DensityMatrix(params.normalization * m, (3, 3))


def sample_chessboard_params(rng: np.random.Generator, cutoff: float = 1e-6) -> ChessboardParams:
    """Draw all six parameters uniformly from the real interval [0,1].

    Draws with m or n below `cutoff` are rejected and redrawn, since s and t
    blow up as n or m approach zero.
    """
    while True:
        a, b, c, d, m, n = rng.uniform(0.0, 1.0, size=6)
        if m >= cutoff and n >= cutoff:
            return ChessboardParams(a, b, c, d, m, n)


def mix_white_noise(rho_e: DensityMatrix, p: float) -> DensityMatrix:
    """White-noise mixture p*rho + (1-p)*identity/d."""
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError(f"noise weight must be in [0,1], got {p}")
    d = rho_e.dim
    mixed = p * rho_e.entries + (1 - p) * np.eye(d) / d
    return DensityMatrix(mixed, rho_e.local_dims)


def random_product_state(local_block_dims, rng) -> ProductState:
    """One Haar-random unit vector per block; deterministic under a fixed seed.

    `rng` may be a numpy Generator or anything np.random.default_rng accepts.
    The blocks are treated as independent parties of the given dimensions.
    """
    dims = tuple(int(d) for d in local_block_dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"block dims must be >= 1, got {dims}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    partition = tuple((i,) for i in range(len(dims)))
    vectors = tuple(haar_vector(d, rng) for d in dims)
    return ProductState(partition, vectors, dims, float("nan"))
