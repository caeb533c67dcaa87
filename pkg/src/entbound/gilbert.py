"""Conditional-gradient search for the closest state of a separability class.

Starting from the maximally mixed state, each iteration asks the extreme-point
oracle for the pure product state sigma_k maximizing tr[(rho - rho_k) sigma],
line-searches the segment between the current iterate and sigma_k with a
bracketed grid refinement, and blends. The final distance value is an upper
bound on the class-restricted entanglement measure, with the iterate itself
as the feasible certificate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from .extremal import OracleConfig, PartitionClass, best_extreme_point
from .qmatrix import (
    DensityMatrix,
    EigenSolverError,
    InvariantViolation,
    MeasureKind,
    TargetState,
    as_array,
    distance,
)

CERTIFICATE_TOL = 1e-9


class SolverError(RuntimeError):
    """A run aborted; `partial` carries the progress made before the failure."""

    def __init__(self, message: str, partial: "GilbertRun | None" = None):
        self.partial = partial
        super().__init__(message)


class IntegrityError(RuntimeError):
    """Fresh re-evaluation of the certificate disagreed with the recorded value."""


class RunStatus(Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    TIME_BUDGET = "time_budget"
    ABORTED = "aborted"


@dataclass(frozen=True)
class GilbertConfig:
    """Iteration and termination knobs of the main loop.

    Termination: stop once the average per-iteration decrease of the distance
    over the trailing `descent_window` iterations drops below
    `descent_threshold`, or at `max_iterations`, or when the optional
    wall-clock budget is exhausted. `runs` independent restarts are performed
    and the smallest value kept.
    """

    max_iterations: int = 70000
    findmin_sections: int = 20
    findmin_rounds: int = 8
    descent_window: int = 500
    descent_threshold: float = 1e-7
    runs: int = 3
    time_budget_s: float | None = None
    record_ensemble: bool = False

    def __post_init__(self):
        if min(self.max_iterations, self.findmin_rounds, self.descent_window, self.runs) < 1:
            raise ValueError("iteration counts must be positive")
        if self.findmin_sections < 2:
            raise ValueError("need at least 2 grid sections")
        if self.descent_threshold < 0:
            raise ValueError("descent threshold must be nonnegative")
        if self.time_budget_s is not None and self.time_budget_s <= 0:
            raise ValueError("time budget must be positive when set")


class IterationRecord(NamedTuple):
    iteration: int
    value: float
    x_m: float
    oracle_value: float


class BracketResult(NamedTuple):
    x_m: float
    value: float
    x_min: float
    x_max: float


@dataclass
class GilbertRun:
    """Outcome of one solver run (or the best of several restarts)."""

    target: DensityMatrix
    measure: MeasureKind
    klass: PartitionClass
    current: DensityMatrix
    best_value: float
    history: list[IterationRecord]
    status: RunStatus
    seed: int | None
    run_index: int = 0
    elapsed_s: float = 0.0
    restart_values: tuple[float, ...] = ()
    ensemble: list[tuple[float, np.ndarray]] | None = None

    @property
    def iterations(self) -> int:
        return len(self.history)


def blend_segment(x, rho_k: np.ndarray, sigma_k: np.ndarray) -> np.ndarray:
    """x*rho_k + (1-x)*sigma_k for scalar x or a 1-d batch of x values.

    The update step and the line-search grid must both go through this
    function: evaluating the grid at x and later blending with the same x
    then yields bit-identical matrices, which keeps the recorded descent
    monotone.
    """
    w = np.asarray(x, dtype=float)
    w = w.reshape(w.shape + (1, 1))
    return w * rho_k + (1.0 - w) * sigma_k


def bracketed_grid_min(
    evaluate: Callable[[np.ndarray], np.ndarray],
    n_sections: int = 20,
    rounds: int = 8,
) -> BracketResult:
    """Minimize a function on [0,1] by repeated grid scans with bracket shrinking.

    Each round evaluates n_sections+1 equispaced points of the current
    bracket, keeps the minimizing point (smallest index on ties) and shrinks
    the bracket to its immediate neighbors, reusing an endpoint as the bound
    when the minimizer sits on one. Infinite values sort after every finite
    value; if a whole round is infinite, x=1 is returned so a caller blending
    along a segment keeps its current point.
    """
    x_min, x_max = 0.0, 1.0
    x_m, value = 1.0, math.inf
    for _ in range(rounds):
        xs = np.linspace(x_min, x_max, n_sections + 1)
        vals = np.asarray(evaluate(xs), dtype=float)
        if not np.any(np.isfinite(vals)):
            fallback = float(np.asarray(evaluate(np.array([1.0])), dtype=float)[0])
            return BracketResult(1.0, fallback, 1.0, 1.0)
        i = int(np.argmin(vals))
        x_m, value = float(xs[i]), float(vals[i])
        x_min = float(xs[max(i - 1, 0)])
        x_max = float(xs[min(i + 1, n_sections)])
    return BracketResult(x_m, value, x_min, x_max)


def find_min_on_segment(
    rho,
    rho_k,
    sigma_k,
    measure: MeasureKind,
    n_sections: int = 20,
    rounds: int = 8,
) -> tuple[float, float]:
    """Minimize D(rho, x*rho_k + (1-x)*sigma_k) over x in [0,1].

    Returns (x_m, value); x_m is within (2/n_sections)**rounds of the grid
    sequence's local minimizer.
    """
    target = TargetState(as_array(rho))
    a, b = as_array(rho_k), as_array(sigma_k)
    result = bracketed_grid_min(
        lambda xs: target.distance_many(blend_segment(xs, a, b), measure),
        n_sections,
        rounds,
    )
    return result.x_m, result.value


def _normalize_seed(rng) -> np.random.SeedSequence:
    if rng is None:
        return np.random.SeedSequence()
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, (int, np.integer)):
        return np.random.SeedSequence(int(rng))
    raise TypeError(
        f"expected an integer seed, a SeedSequence or None, got {type(rng).__name__}"
    )


def _single_run(
    rho: DensityMatrix,
    measure: MeasureKind,
    klass: PartitionClass,
    cfg: GilbertConfig,
    oracle_cfg: OracleConfig,
    stream: np.random.SeedSequence,
    seed_label: int | None,
    run_index: int,
) -> GilbertRun:
    gen = np.random.default_rng(stream)
    target = TargetState(rho.entries)
    local_dims = rho.local_dims
    rho_k = np.eye(rho.dim, dtype=complex) / rho.dim
    warm_cache: dict = {}
    history: list[IterationRecord] = []
    ensemble = [] if cfg.record_ensemble else None
    status = RunStatus.MAX_ITERATIONS
    started = time.monotonic()

    def finish(status: RunStatus) -> GilbertRun:
        return GilbertRun(
            target=rho,
            measure=measure,
            klass=klass,
            current=DensityMatrix(rho_k, local_dims),
            best_value=history[-1].value if history else math.inf,
            history=history,
            status=status,
            seed=seed_label,
            run_index=run_index,
            elapsed_s=time.monotonic() - started,
            ensemble=ensemble,
        )

    for k in range(1, cfg.max_iterations + 1):
        try:
            point = best_extreme_point(
                target.matrix - rho_k, local_dims, klass, oracle_cfg, gen, warm_cache
            )
            sigma_k = point.density()
            result = bracketed_grid_min(
                lambda xs: target.distance_many(blend_segment(xs, rho_k, sigma_k), measure),
                cfg.findmin_sections,
                cfg.findmin_rounds,
            )
        except (InvariantViolation, EigenSolverError, np.linalg.LinAlgError) as exc:
            raise SolverError(
                f"iteration {k} aborted: {exc}", partial=finish(RunStatus.ABORTED)
            ) from exc
        rho_k = blend_segment(result.x_m, rho_k, sigma_k)
        history.append(IterationRecord(k, result.value, result.x_m, point.value))
        if ensemble is not None:
            ensemble.append((result.x_m, point.vector))
        if k > cfg.descent_window:
            drop = history[k - 1 - cfg.descent_window].value - result.value
            if drop / cfg.descent_window < cfg.descent_threshold:
                status = RunStatus.CONVERGED
                break
        if (
            cfg.time_budget_s is not None
            and time.monotonic() - started > cfg.time_budget_s
        ):
            status = RunStatus.TIME_BUDGET
            break
    return finish(status)


def gilbert_run(
    rho: DensityMatrix,
    measure: MeasureKind,
    klass: PartitionClass,
    cfg: GilbertConfig | None = None,
    oracle_cfg: OracleConfig | None = None,
    rng=None,
) -> GilbertRun:
    """Best-of-`cfg.runs` solver result for one target state.

    `rng` may be an integer seed, a SeedSequence or None (fresh entropy).
    Restarts consume independent child streams of the seed, run sequentially,
    and the run with the smallest final value is returned; the final values
    of every restart are kept in `restart_values`.
    """
    cfg = cfg or GilbertConfig()
    oracle_cfg = oracle_cfg or OracleConfig()
    rho.validate()
    klass.concrete_partitions(rho.n_parties)
    master = _normalize_seed(rng)
    seed_label = master.entropy if isinstance(master.entropy, int) else None
    runs = [
        _single_run(rho, measure, klass, cfg, oracle_cfg, stream, seed_label, i)
        for i, stream in enumerate(master.spawn(cfg.runs))
    ]
    best = min(runs, key=lambda r: r.best_value)
    return replace(best, restart_values=tuple(r.best_value for r in runs))


def upper_bound_certificate(run: GilbertRun) -> tuple[float, DensityMatrix]:
    """The run's value together with the feasible state achieving it.

    The distance is re-evaluated from scratch (no cached spectral data) and
    must agree with the recorded value within 1e-9.
    """
    if run.status is RunStatus.ABORTED:
        raise ValueError("cannot certify an aborted run")
    fresh = distance(run.target, run.current, run.measure)
    agreed = fresh == run.best_value or abs(fresh - run.best_value) <= CERTIFICATE_TOL
    if not agreed:
        raise IntegrityError(
            f"re-evaluated distance {fresh!r} deviates from recorded value "
            f"{run.best_value!r} by more than {CERTIFICATE_TOL}"
        )
    return run.best_value, run.current
