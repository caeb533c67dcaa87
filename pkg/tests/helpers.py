"""Independent reference computations for the test suite.

Everything here is deliberately written against plain numpy (or exact
Fractions), not against the package's own fast paths, so tests compare two
unrelated implementations.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    """A random mixed state: normalized Gram matrix of Gaussian columns."""
    r = rank or d
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_pure(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def bloch_grid(step_deg: float) -> np.ndarray:
    """All qubit pure states on an angular grid of the Bloch sphere."""
    thetas = np.deg2rad(np.arange(0.0, 180.0 + 1e-9, step_deg))
    phis = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    states = []
    for th in thetas:
        for ph in phis:
            states.append([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
    return np.asarray(states, dtype=complex)


def product_grid_max(x: np.ndarray, step_deg: float = 3.0) -> float:
    """Brute-force max of <a x b|X|a x b> over two qubit Bloch-sphere grids."""
    a = bloch_grid(step_deg)
    xt = np.asarray(x, dtype=complex).reshape(2, 2, 2, 2)
    best = -np.inf
    chunk = 512
    for lo in range(0, len(a), chunk):
        b = a[lo:lo + chunk]
        # mb[s] = (I x b_s)^dag X (I x b_s), a 2x2 matrix per grid point
        mb = np.einsum("bj,ijkl,bl->bik", b.conj(), xt, b)
        vals = np.einsum("ai,bik,ak->ab", a.conj(), mb, a).real
        best = max(best, float(vals.max()))
    return best


def schmidt_max_overlap(psi: np.ndarray, dims: tuple[int, int]) -> float:
    """Largest squared overlap of a bipartite pure state with product states."""
    s = np.linalg.svd(np.asarray(psi).reshape(dims), compute_uv=False)
    return float(s[0] ** 2)


def entropy_of_entanglement(psi: np.ndarray, dims: tuple[int, int]) -> float:
    """Entropy (bits) of the reduced state of a bipartite pure state."""
    s = np.linalg.svd(np.asarray(psi).reshape(dims), compute_uv=False)
    p = s**2
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log2(p)))


def realignment_norm(rho: np.ndarray, dims: tuple[int, int]) -> float:
    """Trace norm of the realigned matrix; > 1 certifies entanglement."""
    d1, d2 = dims
    r = np.asarray(rho).reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)
    return float(np.sum(np.linalg.svd(r, compute_uv=False)))


def partial_transpose_ref(rho: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Partial transpose on the second party, via explicit index loops."""
    d1, d2 = dims
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    for i1 in range(d1):
        for i2 in range(d2):
            for k1 in range(d1):
                for k2 in range(d2):
                    out[i1 * d2 + i2, k1 * d2 + k2] = rho[i1 * d2 + k2, k1 * d2 + i2]
    return out


def min_pt_eigenvalue(rho: np.ndarray, dims: tuple[int, int]) -> float:
    return float(np.linalg.eigvalsh(partial_transpose_ref(rho, dims))[0])


def naive_relative_entropy(rho: np.ndarray, sigma: np.ndarray, tol: float = 1e-12) -> float:
    """Textbook tr[rho(log2 rho - log2 sigma)] via two eigendecompositions."""
    rv, ru = np.linalg.eigh(rho)
    sv, su = np.linalg.eigh(sigma)
    overlap = np.abs(ru.conj().T @ su) ** 2  # [i, j] = |<r_i|s_j>|^2
    mass = float(np.sum(rv[:, None] * overlap[:, sv <= tol]))
    if mass > 1e-9:
        return float("inf")
    pos = rv > tol
    term1 = float(np.sum(rv[pos] * np.log2(rv[pos])))
    term2 = float(np.sum((rv[:, None] * overlap) * np.log2(np.maximum(sv, tol))[None, :]))
    return max(term1 - term2, 0.0)


def naive_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity via an explicit dense square root of rho."""
    rv, ru = np.linalg.eigh(rho)
    root = (ru * np.sqrt(np.clip(rv, 0, None))) @ ru.conj().T
    inner = root @ sigma @ root
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(vals, 0, None))) ** 2)


def exact_bracket_minimize(f, n_sections: int, rounds: int):
    """Grid-refinement minimizer in exact rational arithmetic.

    `f` maps a Fraction to an exactly comparable value. Returns the final
    (x_m, bracket_width) as Fractions; mirrors the float implementation's
    rules (smallest index on ties, endpoints reused as bounds at the edges).
    """
    x_min, x_max = Fraction(0), Fraction(1)
    x_m = Fraction(1)
    for _ in range(rounds):
        stepw = (x_max - x_min) / n_sections
        xs = [x_min + i * stepw for i in range(n_sections + 1)]
        vals = [f(x) for x in xs]
        i = vals.index(min(vals))
        x_m = xs[i]
        x_min = xs[max(i - 1, 0)]
        x_max = xs[min(i + 1, n_sections)]
    return x_m, x_max - x_min


def kron_all(vectors) -> np.ndarray:
    out = np.asarray(vectors[0], dtype=complex)
    for v in vectors[1:]:
        out = np.kron(out, np.asarray(v, dtype=complex))
    return out
