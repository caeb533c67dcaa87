"""Command-line front end: single measurements, parameter sweeps and histograms.

Every invocation is reproducible from its recorded seed: sweep rows draw
their RNG streams from (master seed, row index), so a rerun with the same
flags regenerates identical CSV output. Values are printed with 17
significant digits, enough to round-trip doubles exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .extremal import OracleConfig, PartitionClass
from .gilbert import GilbertConfig, GilbertRun, RunStatus, SolverError, gilbert_run, upper_bound_certificate
from .qmatrix import DensityMatrix, InvariantViolation, MeasureKind
from .states import (
    ChessboardParams,
    chessboard,
    ghz,
    horodecki,
    mix_white_noise,
    sample_chessboard_params,
    w_state,
)

USAGE_EXIT = 2
SOLVER_EXIT = 3

CSV_FLOAT = "{:.17g}"


class UsageError(ValueError):
    """Bad flags, state specs or input files; mapped to exit code 2."""


def parse_state_file(path: str) -> DensityMatrix:
    """Load a density matrix from the JSON file format.

    The format is {"local_dims": [...], "re": [[...]], "im": [[...]]} with
    row-major real and imaginary parts; "im" may be omitted for real
    matrices. All state invariants are checked before returning.
    """
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"state file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "local_dims" not in payload or "re" not in payload:
        raise UsageError(f"state file {path} must contain 'local_dims' and 're'")
    re_part = np.asarray(payload["re"], dtype=float)
    im_part = np.asarray(payload.get("im", np.zeros_like(re_part)), dtype=float)
    if re_part.shape != im_part.shape:
        raise UsageError(f"state file {path}: 're' and 'im' shapes differ")
    try:
        return DensityMatrix.from_array(re_part + 1j * im_part, payload["local_dims"])
    except InvariantViolation as exc:
        raise UsageError(f"state file {path} rejected: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"state file {path} rejected: {exc}") from exc


def matrix_file_payload(dm: DensityMatrix) -> dict:
    return {
        "local_dims": list(dm.local_dims),
        "re": dm.entries.real.tolist(),
        "im": dm.entries.imag.tolist(),
    }


def parse_state_spec(spec: str) -> tuple[str, DensityMatrix]:
    """Build a state from a descriptor like ghz:3, horodecki:0.5 or file:PATH.

    A spec without a known family prefix is treated as a file path. Returns
    the normalized descriptor together with the state.
    """
    family, _, arg = spec.partition(":")
    try:
        if family == "ghz":
            return spec, ghz(int(arg))
        if family == "w":
            return spec, w_state(int(arg))
        if family == "horodecki":
            return spec, horodecki(float(arg))
        if family == "chessboard":
            parts = [float(v) for v in arg.split(",")]
            if len(parts) != 6:
                raise UsageError(
                    f"chessboard spec needs 6 comma-separated parameters, got {len(parts)}"
                )
            return spec, chessboard(ChessboardParams(*parts))
    except UsageError:
        raise
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad state spec {spec!r}: {exc}") from exc
    if family == "file":
        return spec, parse_state_file(arg)
    if ":" not in spec:
        return f"file:{spec}", parse_state_file(spec)
    raise UsageError(f"unknown state family {family!r} in {spec!r}")


def parse_class_spec(spec: str) -> PartitionClass:
    """Parse full, bisep or partition:SPEC with blocks like 12|3 (1-based parties)."""
    if spec == "full":
        return PartitionClass.fully_separable()
    if spec == "bisep":
        return PartitionClass.bi_separable()
    if spec.startswith("partition:"):
        blocks = []
        for chunk in spec[len("partition:"):].split("|"):
            if not chunk:
                raise UsageError(f"empty block in class spec {spec!r}")
            labels = chunk.split(",") if "," in chunk else list(chunk)
            try:
                block = tuple(int(p) - 1 for p in labels)
            except ValueError as exc:
                raise UsageError(f"bad party index in class spec {spec!r}") from exc
            if any(p < 0 for p in block):
                raise UsageError(f"party indices are 1-based in {spec!r}")
            blocks.append(block)
        try:
            return PartitionClass.fixed(blocks)
        except ValueError as exc:
            raise UsageError(f"bad class spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown class spec {spec!r} (use full, bisep or partition:SPEC)")


def _parse_measure(name: str) -> MeasureKind:
    try:
        return MeasureKind(name)
    except ValueError as exc:
        raise UsageError(f"unknown measure {name!r}") from exc


@dataclass
class RunRecord:
    """Flat, JSON-serializable record of one solver invocation."""

    state: str
    noise_p: float | None
    measure: str
    klass: str
    seed: int | None
    max_iterations: int
    findmin_sections: int
    findmin_rounds: int
    descent_window: int
    descent_threshold: float
    runs: int
    time_budget_s: float | None
    record_ensemble: bool
    restarts: int
    max_sweeps: int
    sweep_tol: float
    warm_start: None
    best_value: float
    iterations: int
    status: str
    restart_values: list[float]
    wall_clock_s: float
    version: str

    @classmethod
    def from_run(
        cls,
        run: GilbertRun,
        state: str,
        noise_p: float | None,
        cfg: GilbertConfig,
        oracle_cfg: OracleConfig,
        seed: int | None,
        wall_clock_s: float,
    ) -> "RunRecord":
        return cls(
            state=state,
            noise_p=noise_p,
            measure=run.measure.value,
            klass=run.klass.label(),
            seed=seed,
            max_iterations=cfg.max_iterations,
            findmin_sections=cfg.findmin_sections,
            findmin_rounds=cfg.findmin_rounds,
            descent_window=cfg.descent_window,
            descent_threshold=cfg.descent_threshold,
            runs=cfg.runs,
            time_budget_s=cfg.time_budget_s,
            record_ensemble=cfg.record_ensemble,
            restarts=oracle_cfg.restarts,
            max_sweeps=oracle_cfg.max_sweeps,
            sweep_tol=oracle_cfg.sweep_tol,
            warm_start=None,
            best_value=run.best_value,
            iterations=run.iterations,
            status=run.status.value,
            restart_values=list(run.restart_values),
            wall_clock_s=wall_clock_s,
            version=__version__,
        )

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, payload: dict) -> "RunRecord":
        return cls(**payload)


def _master_seed(seed: int | None) -> int:
    """The recorded master seed: the flag value, or fresh OS entropy."""
    if seed is not None:
        return int(seed)
    return int(np.random.SeedSequence().entropy)


def _gilbert_config(args) -> GilbertConfig:
    return GilbertConfig(
        max_iterations=args.max_iter,
        runs=args.runs,
        time_budget_s=args.time_budget_s,
    )


def _row_worker(task):
    """Solve one sweep row; returns (key, value, iterations, status, error)."""
    key, rho, measure, klass, cfg, oracle_cfg, master, row_idx = task
    stream = np.random.SeedSequence([master, row_idx])
    try:
        run = gilbert_run(rho, measure, klass, cfg, oracle_cfg, rng=stream)
        return key, run.best_value, run.iterations, run.status.value, None
    except SolverError as exc:
        partial = exc.partial
        iterations = partial.iterations if partial is not None else 0
        return key, None, iterations, RunStatus.ABORTED.value, str(exc)


def _parallel_rows(tasks, threads: int):
    """Run row tasks, serially or on a process pool, and sort results by key."""
    if threads <= 1 or len(tasks) <= 1:
        results = [_row_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_row_worker, tasks))
    return sorted(results, key=lambda r: r[0])


def _format_value(value: float | None) -> str:
    return "" if value is None else CSV_FLOAT.format(value)


def _emit_csv(header, rows, out_path: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _write_sidecar(out_path: str | None, payload: dict) -> None:
    if out_path:
        with open(out_path + ".meta.json", "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def cmd_measure(args) -> int:
    descriptor, rho = parse_state_spec(args.state)
    if args.noise_p is not None:
        rho = mix_white_noise(rho, args.noise_p)
    measure = _parse_measure(args.measure)
    klass = parse_class_spec(args.klass or "full")
    cfg = _gilbert_config(args)
    oracle_cfg = OracleConfig()
    master = _master_seed(args.seed)
    started = time.monotonic()
    run = gilbert_run(rho, measure, klass, cfg, oracle_cfg, rng=master)
    record = RunRecord.from_run(
        run, descriptor, args.noise_p, cfg, oracle_cfg, master,
        wall_clock_s=time.monotonic() - started,
    )
    text = json.dumps(record.to_json_dict(), indent=2)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if args.certificate:
        value, closest = upper_bound_certificate(run)
        payload = {"measure": measure.value, "value": value, **matrix_file_payload(closest)}
        with open(args.certificate, "w") as fh:
            json.dump(payload, fh)
            fh.write("\n")
    return 0


def _sweep_exit(results) -> int:
    return 0 if any(r[1] is not None for r in results) else SOLVER_EXIT


def cmd_sweep_noise(args) -> int:
    if not (0 <= args.p_min <= args.p_max <= 1):
        raise UsageError("need 0 <= p-min <= p-max <= 1")
    if args.steps < 1:
        raise UsageError("need at least 1 step")
    descriptor, base = parse_state_spec(args.state)
    measure = _parse_measure(args.measure)
    class_specs = args.klass or ["full", "bisep"]
    klasses = [(spec, parse_class_spec(spec)) for spec in class_specs]
    cfg = _gilbert_config(args)
    oracle_cfg = OracleConfig()
    master = _master_seed(args.seed)
    ps = np.linspace(args.p_min, args.p_max, args.steps)

    tasks = []
    for i, p in enumerate(ps):
        rho_p = mix_white_noise(base, float(p))
        for j, (_, klass) in enumerate(klasses):
            row_idx = i * len(klasses) + j
            tasks.append(((i, j), rho_p, measure, klass, cfg, oracle_cfg, master, row_idx))
    started = time.monotonic()
    results = _parallel_rows(tasks, args.threads)

    rows = []
    for (i, j), value, iterations, status, _ in results:
        rows.append([
            CSV_FLOAT.format(ps[i]), klasses[j][0], measure.value,
            _format_value(value), iterations, status, f"{master}:{i * len(klasses) + j}",
        ])
    _emit_csv(["p", "class", "measure", "value", "iterations", "status", "seed"], rows, args.out)
    _write_sidecar(args.out, {
        "command": "sweep-noise", "state": descriptor, "measure": measure.value,
        "classes": class_specs, "p_min": args.p_min, "p_max": args.p_max,
        "steps": args.steps, "seed": master, "config": asdict(cfg),
        "oracle": {"restarts": oracle_cfg.restarts, "max_sweeps": oracle_cfg.max_sweeps,
                   "sweep_tol": oracle_cfg.sweep_tol},
        "version": __version__, "elapsed_s": time.monotonic() - started,
        "rows": len(rows),
    })
    return _sweep_exit(results)


def cmd_grid_horodecki(args) -> int:
    if args.a_steps < 2 or args.p_steps < 2:
        raise UsageError("need at least 2 steps on each grid axis")
    if not (0 < args.a_min <= args.a_max < 1):
        raise UsageError("need 0 < a-min <= a-max < 1")
    measure = _parse_measure(args.measure)
    klass_spec = args.klass or "full"
    klass = parse_class_spec(klass_spec)
    cfg = _gilbert_config(args)
    oracle_cfg = OracleConfig()
    master = _master_seed(args.seed)
    a_values = np.linspace(args.a_min, args.a_max, args.a_steps)
    p_values = np.linspace(0.0, 1.0, args.p_steps)

    tasks = []
    for i, a in enumerate(a_values):
        base = horodecki(float(a))
        for j, p in enumerate(p_values):
            rho = mix_white_noise(base, float(p))
            row_idx = i * len(p_values) + j
            tasks.append(((i, j), rho, measure, klass, cfg, oracle_cfg, master, row_idx))
    started = time.monotonic()
    results = _parallel_rows(tasks, args.threads)

    # trailing empty `overlay` column: reserved for an external detection
    # boundary to be joined in by plotting tools, never computed here
    rows = []
    for (i, j), value, iterations, status, _ in results:
        rows.append([
            CSV_FLOAT.format(a_values[i]), CSV_FLOAT.format(p_values[j]), measure.value,
            _format_value(value), iterations, status,
            f"{master}:{i * len(p_values) + j}", "",
        ])
    _emit_csv(
        ["a", "p", "measure", "value", "iterations", "status", "seed", "overlay"],
        rows, args.out,
    )
    _write_sidecar(args.out, {
        "command": "grid-horodecki", "measure": measure.value, "class": klass_spec,
        "a_min": args.a_min, "a_max": args.a_max, "a_steps": args.a_steps,
        "p_steps": args.p_steps, "seed": master, "config": asdict(cfg),
        "version": __version__, "elapsed_s": time.monotonic() - started,
        "rows": len(rows),
    })
    return _sweep_exit(results)


def _histogram_rows(values, n_bins: int, lo: float, hi: float, total: int):
    """Equal-width bins over [lo, hi]; fractions are relative to all samples."""
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return [
        [CSV_FLOAT.format(edges[k]), CSV_FLOAT.format(edges[k + 1]),
         int(counts[k]), CSV_FLOAT.format(counts[k] / total)]
        for k in range(n_bins)
    ]


def cmd_chessboard_hist(args) -> int:
    if args.samples < 1:
        raise UsageError("need at least 1 sample")
    if args.bins < 1:
        raise UsageError("need at least 1 bin")
    if not args.out:
        raise UsageError("chessboard-hist requires --out (it writes several CSV files)")
    measure = _parse_measure(args.measure)
    klass_spec = args.klass or "full"
    klass = parse_class_spec(klass_spec)
    cfg = _gilbert_config(args)
    oracle_cfg = OracleConfig()
    master = _master_seed(args.seed)

    # stream [master, 0] draws the parameters; stream [master, 1+i] solves sample i
    param_rng = np.random.default_rng(np.random.SeedSequence([master, 0]))
    rejected = 0
    params = []
    for _ in range(args.samples):
        while True:
            raw = param_rng.uniform(0.0, 1.0, size=6)
            if raw[4] >= 1e-6 and raw[5] >= 1e-6:
                params.append(ChessboardParams(*(float(v) for v in raw)))
                break
            rejected += 1

    tasks = []
    for i, par in enumerate(params):
        tasks.append(((i,), chessboard(par), measure, klass, cfg, oracle_cfg, master, 1 + i))
    started = time.monotonic()
    results = _parallel_rows(tasks, args.threads)

    sample_rows = []
    values = []
    for (i,), value, iterations, status, _ in results:
        par = params[i]
        if value is not None:
            values.append(value)
        sample_rows.append([
            i,
            CSV_FLOAT.format(par.a), CSV_FLOAT.format(par.b), CSV_FLOAT.format(par.c),
            CSV_FLOAT.format(par.d), CSV_FLOAT.format(par.m), CSV_FLOAT.format(par.n),
            _format_value(value), f"{master}:{1 + i}",
        ])
    _emit_csv(
        ["id", "a", "b", "c", "d", "m", "n", "value", "seed"], sample_rows, args.out,
    )

    root, ext = os.path.splitext(args.out)
    total = len(values) or 1
    top = max(values) if values else 1.0
    hist_rows = _histogram_rows(np.array(values), args.bins, 0.0, top, total)
    _emit_csv(["bin_lo", "bin_hi", "count", "fraction"], hist_rows, root + "_hist" + ext)
    small = np.array([v for v in values if v < 0.01])
    sub_rows = _histogram_rows(small, args.bins, 0.0, 0.01, total)
    _emit_csv(["bin_lo", "bin_hi", "count", "fraction"], sub_rows, root + "_hist_sub" + ext)

    _write_sidecar(args.out, {
        "command": "chessboard-hist", "measure": measure.value, "class": klass_spec,
        "samples": args.samples, "bins": args.bins, "seed": master,
        "rejected_draws": rejected, "config": asdict(cfg),
        "version": __version__, "elapsed_s": time.monotonic() - started,
        "rows": len(sample_rows),
    })
    return _sweep_exit(results)


def cmd_validate(args) -> int:
    dm = parse_state_file(args.path)
    print(json.dumps({
        "valid": True, "path": args.path, "dim": dm.dim,
        "local_dims": list(dm.local_dims),
    }))
    return 0


def _add_common_flags(sub, include_noise=False, repeat_class=False):
    sub.add_argument("--measure", default="bures2", choices=["bures2", "relent"],
                     help="distance measure (default bures2)")
    class_help = ("separability class: full, bisep or partition:SPEC "
                  "(SPEC like 12|3, 1-based parties)")
    if repeat_class:
        sub.add_argument("--class", dest="klass", action="append",
                         help=class_help + "; repeatable (default: full and bisep)")
    else:
        sub.add_argument("--class", dest="klass", help=class_help)
    sub.add_argument("--max-iter", type=int, default=70000,
                     help="iteration cap per run (default 70000)")
    sub.add_argument("--runs", type=int, default=3,
                     help="independent restarts, smallest value kept (default 3)")
    sub.add_argument("--seed", type=int, default=None,
                     help="master seed; fresh entropy when omitted (always recorded)")
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     help="worker processes for independent rows (default: all cores)")
    sub.add_argument("--time-budget-s", type=float, default=None,
                     help="optional wall-clock budget per run, in seconds")
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    if include_noise:
        sub.add_argument("--noise-p", type=float, default=None,
                         help="mix the state with white noise at visibility p")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entbound",
        description="Upper bounds on distance-based entanglement measures "
                    "via conditional-gradient search over separable states.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    m = subs.add_parser("measure", help="bound the measure for a single state")
    m.add_argument("--state", required=True,
                   help="ghz:N, w:N, horodecki:A, chessboard:a,b,c,d,m,n or file:PATH")
    _add_common_flags(m, include_noise=True)
    m.add_argument("--certificate", default=None,
                   help="write the closest-state certificate to this JSON file")
    m.set_defaults(func=cmd_measure)

    s = subs.add_parser("sweep-noise", help="sweep the white-noise visibility p")
    s.add_argument("--state", required=True, help="base state spec (noise applied per p)")
    s.add_argument("--p-min", type=float, default=0.0)
    s.add_argument("--p-max", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=11, help="number of p points (default 11)")
    _add_common_flags(s, repeat_class=True)
    s.set_defaults(func=cmd_sweep_noise)

    g = subs.add_parser("grid-horodecki", help="grid over the family parameter a and noise p")
    g.add_argument("--a-min", type=float, default=0.1)
    g.add_argument("--a-max", type=float, default=0.9)
    g.add_argument("--a-steps", type=int, default=5)
    g.add_argument("--p-steps", type=int, default=5)
    _add_common_flags(g)
    g.set_defaults(func=cmd_grid_horodecki)

    c = subs.add_parser("chessboard-hist", help="sampled value distribution of chessboard states")
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--bins", type=int, default=20)
    _add_common_flags(c)
    c.set_defaults(func=cmd_chessboard_hist)

    v = subs.add_parser("validate", help="check a state file against all invariants")
    v.add_argument("path", help="JSON matrix file")
    v.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return SOLVER_EXIT


if __name__ == "__main__":
    sys.exit(main())
