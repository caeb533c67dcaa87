"""Extreme-point search: maximize tr(X sigma) over pure product states of a partition class.

The search is an alternating ascent ("see-saw"): holding all blocks of a
product vector fixed except one, the optimal block vector is the leading
eigenvector of the effective operator obtained by contracting X with the
other blocks. Each block update is an exact local maximization, so the
objective is monotone along a sweep; random restarts guard against local
maxima and a warm start carries the previous solution across solver
iterations.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .qmatrix import hermitize

UNIT_NORM_TOL = 1e-12
ASSEMBLED_NORM_TOL = 1e-10


@dataclass(frozen=True)
class PartitionClass:
    """Which convex set of product states is targeted.

    kind is one of "full" (every party its own block), "bisep" (best over all
    bipartitions) or "fixed" (an explicit list of disjoint party blocks,
    0-based indices).
    """

    kind: str
    blocks: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("full", "bisep", "fixed"):
            raise ValueError(f"unknown partition class kind {self.kind!r}")
        if self.kind == "fixed":
            if not self.blocks:
                raise ValueError("fixed partition requires at least one block")
            normalized = tuple(tuple(sorted(int(p) for p in b)) for b in self.blocks)
            flat = [p for b in normalized for p in b]
            if any(len(b) == 0 for b in normalized):
                raise ValueError("empty block in fixed partition")
            if len(flat) != len(set(flat)):
                raise ValueError(f"fixed partition blocks overlap: {normalized}")
            object.__setattr__(self, "blocks", normalized)
        elif self.blocks is not None:
            raise ValueError(f"{self.kind!r} partition class takes no explicit blocks")

    @classmethod
    def fully_separable(cls) -> "PartitionClass":
        return cls("full")

    @classmethod
    def bi_separable(cls) -> "PartitionClass":
        return cls("bisep")

    @classmethod
    def fixed(cls, blocks) -> "PartitionClass":
        return cls("fixed", tuple(tuple(b) for b in blocks))

    def concrete_partitions(self, n_parties: int) -> list[tuple[tuple[int, ...], ...]]:
        """All concrete block lists searched for this class on n parties."""
        if self.kind == "full":
            return [tuple((p,) for p in range(n_parties))]
        if self.kind == "bisep":
            if n_parties < 2:
                raise ValueError("bi-separable class needs at least 2 parties")
            return [pair for pair in enumerate_bipartitions(n_parties)]
        parties = sorted(p for b in self.blocks for p in b)
        if parties != list(range(n_parties)):
            raise ValueError(
                f"fixed partition {self.blocks} does not cover parties 0..{n_parties - 1}"
            )
        return [self.blocks]

    def label(self) -> str:
        if self.kind == "full":
            return "full"
        if self.kind == "bisep":
            return "bisep"
        return "partition:" + "|".join(
            ",".join(str(p + 1) for p in block) for block in self.blocks
        )


def enumerate_bipartitions(n_parties: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All 2^(n-1) - 1 unordered bipartitions of parties 0..n-1.

    Each bipartition is listed once as (block containing party 0, complement),
    in lexicographic order of the first block.
    """
    if n_parties < 2:
        raise ValueError("need at least 2 parties to bipartition")
    rest = list(range(1, n_parties))
    firsts = []
    for size in range(0, n_parties - 1):
        firsts.extend((0,) + combo for combo in combinations(rest, size))
    firsts.sort()
    return [
        (first, tuple(p for p in range(n_parties) if p not in first))
        for first in firsts
    ]


def haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """A Haar-random unit vector: normalized complex Gaussian entries."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def block_dims(partition, local_dims) -> tuple[int, ...]:
    return tuple(math.prod(local_dims[p] for p in block) for block in partition)


@dataclass(frozen=True)
class ProductState:
    """A pure product state: one unit vector per partition block.

    `value` caches tr(X sigma) for the functional X the state was produced
    for. Block vectors are in the tensor basis of the block's parties in
    ascending party order.
    """

    partition: tuple[tuple[int, ...], ...]
    vectors: tuple[np.ndarray, ...]
    local_dims: tuple[int, ...]
    value: float

    @property
    def vector(self) -> np.ndarray:
        """The assembled global vector, axes ordered by party."""
        return assemble_product_vector(self.partition, self.vectors, self.local_dims)

    def density(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())

    def check(self) -> "ProductState":
        for vec in self.vectors:
            dev = abs(float(np.linalg.norm(vec)) - 1.0)
            if dev > UNIT_NORM_TOL:
                raise ValueError(f"block vector norm off by {dev:.3e}")
        dev = abs(float(np.linalg.norm(self.vector)) - 1.0)
        if dev > ASSEMBLED_NORM_TOL:
            raise ValueError(f"assembled vector norm off by {dev:.3e}")
        return self


def assemble_product_vector(partition, vectors, local_dims) -> np.ndarray:
    """Tensor the block vectors together, mapping block axes back to party order."""
    n = len(local_dims)
    letters = string.ascii_lowercase[:n]
    subs = ",".join("".join(letters[p] for p in block) for block in partition)
    operands = [
        vec.reshape(tuple(local_dims[p] for p in block))
        for block, vec in zip(partition, vectors)
    ]
    tensor = np.einsum(f"{subs}->{letters}", *operands)
    return tensor.reshape(-1)


@dataclass(frozen=True)
class OracleConfig:
    """Knobs for the see-saw search."""

    restarts: int = 5
    max_sweeps: int = 50
    sweep_tol: float = 1e-10
    warm_start: ProductState | None = None

    def __post_init__(self):
        if self.restarts < 1 or self.max_sweeps < 1:
            raise ValueError("restarts and max_sweeps must be >= 1")
        if self.sweep_tol < 0:
            raise ValueError("sweep_tol must be nonnegative")


# axis permutations per (local_dims, partition, block index), reused across calls
_CONTRACTION_CACHE: dict = {}


def _block_contraction_plan(local_dims, partition, j):
    """Axis permutation exposing block j: (other rows, j rows, other cols, j cols)."""
    key = (local_dims, partition, j)
    plan = _CONTRACTION_CACHE.get(key)
    if plan is None:
        n = len(local_dims)
        others = [p for i, block in enumerate(partition) if i != j for p in block]
        mine = list(partition[j])
        perm = others + mine + [n + p for p in others] + [n + p for p in mine]
        d_oth = math.prod(local_dims[p] for p in others) if others else 1
        dj = math.prod(local_dims[p] for p in mine)
        plan = (tuple(perm), d_oth, dj)
        _CONTRACTION_CACHE[key] = plan
    return plan


def _kron_rows(parts) -> np.ndarray:
    """Row-wise Kronecker product of (batch, d_i) factors, in the given order."""
    ws = parts[0]
    for v in parts[1:]:
        ws = (ws[:, :, None] * v[:, None, :]).reshape(ws.shape[0], -1)
    return ws


def _top_eig_2x2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Largest eigenpair of a (batch, 2, 2) stack of Hermitian matrices, closed form.

    Equivalent to hermitize + eigh + taking the last column, but without the
    per-matrix LAPACK overhead, which dominates the sweep cost on qubit
    blocks. The branch on the diagonal gap avoids the cancellation that makes
    the naive eigenvector formula collapse for near-diagonal input.
    """
    a = m[..., 0, 0].real
    c = m[..., 1, 1].real
    b = 0.5 * (m[..., 0, 1] + np.conj(m[..., 1, 0]))
    half = 0.5 * (a - c)
    r = np.sqrt(half * half + b.real * b.real + b.imag * b.imag)
    top = 0.5 * (a + c) + r
    upper = half >= 0
    v0 = np.where(upper, half + r + 0j, b)
    v1 = np.where(upper, np.conj(b), r - half + 0j)
    nsq = v0.real**2 + v0.imag**2 + v1.real**2 + v1.imag**2
    # nsq vanishes only for (near-)multiples of the identity; any unit
    # vector maximizes then, and (0, 1) matches the eigh column convention
    deg = nsq < 1e-300
    inv = 1.0 / np.sqrt(np.where(deg, 1.0, nsq))
    vec = np.empty(m.shape[:-2] + (2,), dtype=complex)
    vec[..., 0] = np.where(deg, 0.0, v0 * inv)
    vec[..., 1] = np.where(deg, 1.0, v1 * inv)
    return vec, top


def _batch_objectives(x, partition, vectors, local_dims) -> np.ndarray:
    """Re <psi|X|psi> for a batch of product vectors, one per restart."""
    n = len(local_dims)
    concat = [p for block in partition for p in block]
    psi = _kron_rows(vectors)
    if concat != sorted(concat):
        shaped = psi.reshape((psi.shape[0],) + tuple(local_dims[p] for p in concat))
        axes = [0] + [1 + concat.index(p) for p in range(n)]
        psi = shaped.transpose(axes).reshape(psi.shape[0], -1)
    return np.sum(psi.conj() * (psi @ x.T), axis=1).real


def _seesaw_all(x, x_tensor, local_dims, partition, starts, max_sweeps, sweep_tol,
                record_trace: bool = False):
    """Alternating leading-eigenvector ascent, all restarts in lockstep.

    Starts whose per-sweep gain falls below sweep_tol are frozen; the sweep
    loop ends when every start is frozen or max_sweeps is reached. Each block
    update is an exact local maximization, so per-start objectives are
    monotone along the returned trace.
    """
    n_blocks = len(partition)
    batch = len(starts)
    vectors = [np.stack([s[i] for s in starts]) for i in range(n_blocks)]
    obj = _batch_objectives(x, partition, vectors, local_dims)
    trace = [obj.copy()] if record_trace else None

    plans = [_block_contraction_plan(local_dims, partition, j) for j in range(n_blocks)]
    # permuted copies of X, flattened so the two contractions below are matmuls
    xps = [
        x_tensor.transpose(perm).reshape(d_oth, dj * d_oth * dj)
        for perm, d_oth, dj in plans
    ]

    active = np.ones(batch, dtype=bool)
    for _ in range(max_sweeps):
        everyone = bool(active.all())
        idx = slice(None) if everyone else np.flatnonzero(active)
        count = batch if everyone else len(idx)
        before = obj[idx].copy()
        for j in range(n_blocks):
            _, d_oth, dj = plans[j]
            if n_blocks == 1:
                m = np.broadcast_to(xps[j].reshape(dj, dj), (count, dj, dj))
            else:
                ws = _kron_rows([
                    (vectors[i] if everyone else vectors[i][idx])
                    for i in range(n_blocks) if i != j
                ])
                # m[s] = sum_{p,q} conj(ws[s,p]) X[p,:,q,:] ws[s,q]
                t = (ws.conj() @ xps[j]).reshape(count, dj, d_oth, dj)
                t = t.transpose(0, 1, 3, 2).reshape(count, dj * dj, d_oth)
                m = (t @ ws[:, :, None]).reshape(count, dj, dj)
            if dj == 2:
                vecs, top = _top_eig_2x2(m)
            else:
                vals, eig = np.linalg.eigh(hermitize(m))
                vecs, top = eig[..., -1], vals[..., -1]
            vectors[j][idx] = vecs
            obj[idx] = top
            if record_trace:
                trace.append(obj.copy())
        active[idx] = (obj[idx] - before) >= sweep_tol
        if not active.any():
            break
    return vectors, obj, trace


def best_product_state(
    x,
    local_dims,
    partition,
    cfg: OracleConfig,
    rng: np.random.Generator,
) -> ProductState:
    """Best pure product state for the functional tr(X sigma) on a fixed partition.

    Runs the see-saw from the warm start (when one is supplied for this
    partition) plus random product starts, and keeps the best candidate. The
    returned value is a certified lower bound on the true maximum; global
    optimality is not claimed.
    """
    local_dims = tuple(int(d) for d in local_dims)
    partition = tuple(tuple(b) for b in partition)
    if not partition:
        raise ValueError("empty partition")
    x = np.asarray(x, dtype=complex)
    if x.shape != (math.prod(local_dims),) * 2:
        raise ValueError(f"operator shape {x.shape} does not match dims {local_dims}")
    x_tensor = x.reshape(tuple(local_dims) * 2)
    dims = block_dims(partition, local_dims)

    starts = []
    if cfg.warm_start is not None and cfg.warm_start.partition == partition:
        starts.append(tuple(cfg.warm_start.vectors))
    while len(starts) < cfg.restarts:
        starts.append(tuple(haar_vector(d, rng) for d in dims))

    vectors, obj, _ = _seesaw_all(
        x, x_tensor, local_dims, partition, starts, cfg.max_sweeps, cfg.sweep_tol
    )
    best = int(np.argmax(obj))
    winner = tuple(np.ascontiguousarray(v[best]) for v in vectors)
    return ProductState(partition, winner, local_dims, float(obj[best]))


def best_extreme_point(
    x,
    local_dims,
    klass: PartitionClass,
    cfg: OracleConfig,
    rng: np.random.Generator,
    warm_cache: dict | None = None,
) -> ProductState:
    """Best product state over all partitions of a class.

    For the bi-separable class every bipartition is searched and the overall
    best returned. When a `warm_cache` dict is supplied, the previous winner
    of each concrete partition seeds that partition's search and the cache is
    refreshed with the new winners.
    """
    local_dims = tuple(int(d) for d in local_dims)
    partitions = klass.concrete_partitions(len(local_dims))
    best = None
    for partition in partitions:
        warm = warm_cache.get(partition) if warm_cache is not None else cfg.warm_start
        candidate = best_product_state(
            x, local_dims, partition, replace(cfg, warm_start=warm), rng
        )
        if warm_cache is not None:
            warm_cache[partition] = candidate
        if best is None or candidate.value > best.value:
            best = candidate
    return best
