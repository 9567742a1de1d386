"""Command-line entry point.

``run`` simulates scenario files and writes ``log.csv``, ``summary.json``
and ``path.csv``; ``verify`` runs the oracle suite. Exit codes: 0 success,
1 check failure, 2 validation error, 3 divergence, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .model import ScenarioError, load_scenario
from .sim import RunMetrics, SimLog, SimulationDiverged, compute_metrics, run
from .verify import Faults, format_table, run_checks

EXIT_OK, EXIT_CHECK, EXIT_VALIDATION, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4

FORCE_BOUND_TOLERANCE = 1.05
TRACKING_RMS_LIMIT = 2e-3  # m

LOG_COLUMNS = (
    ["t"] + [f"th{i}" for i in range(1, 7)] + [f"thd{i}" for i in range(1, 7)]
    + ["x", "y", "z", "xr", "yr", "zr", "fx", "fy", "fz", "ex", "ey", "ez", "es_x", "es_y", "es_z"]
    + [f"tau{i}" for i in range(1, 7)] + ["case_x", "case_y", "case_z", "sat_acc", "sat_tau"]
)
PATH_COLUMNS = ["t", "x", "y", "z", "xr", "yr", "zr"]
SUMMARY_KEYS = ("scenario", "scenario_hash", "dt", "duration", "records", "status", "metrics", "checks", "artifacts")


class CheckOutcome(NamedTuple):
    name: str
    passed: bool
    observed: float
    threshold: float


class RunReport(NamedTuple):
    metrics: RunMetrics | None
    checks: list[CheckOutcome]
    artifacts: dict[str, str]
    exit_code: int
    message: str = ""


def log_table(log: SimLog) -> np.ndarray:
    return np.column_stack([
        log.t, log.theta, log.theta_dot, log.x, log.x_ref, log.f, log.e, log.e_sys, log.tau,
        log.case, log.sat_acc, log.sat_tau,
    ]).astype(float)


def _write_csv(path: Path, columns: Sequence[str], table: np.ndarray) -> None:
    # %.17g round-trips every double
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(columns), comments="")


def force_bound_check(metrics: RunMetrics) -> list[CheckOutcome]:
    out = [
        CheckOutcome(f"force_bound_{axis}", bool(r <= FORCE_BOUND_TOLERANCE), float(r), FORCE_BOUND_TOLERANCE)
        for axis, r in zip("xyz", metrics.force_bound_violation_ratio)
    ]
    out.append(CheckOutcome("contact_duration", metrics.contact_duration > 0, metrics.contact_duration, 0.0))
    return out


def tracking_check(metrics: RunMetrics) -> list[CheckOutcome]:
    rms = metrics.free_space_rms_error
    return [CheckOutcome("free_space_rms", bool(rms < TRACKING_RMS_LIMIT), rms, TRACKING_RMS_LIMIT)]


def _checks_for(which: str | None, metrics: RunMetrics) -> list[CheckOutcome]:
    if which is None:
        return []
    checks = []
    if which in ("force-bound", "all"):
        checks += force_bound_check(metrics)
    if which in ("tracking", "all"):
        checks += tracking_check(metrics)
    return checks


def _summary(scenario, log: SimLog, status: str, metrics, checks, artifacts) -> dict:
    return {
        "scenario": scenario.name,
        "scenario_hash": log.meta.get("scenario_hash", ""),
        "dt": scenario.dt,
        "duration": scenario.duration,
        "records": len(log),
        "status": status,
        "metrics": metrics.as_dict() if metrics is not None else None,
        "checks": {c.name: {"passed": c.passed, "observed": c.observed, "threshold": c.threshold} for c in checks},
        "artifacts": artifacts,
    }


def cmd_run(path, out_dir, dt=None, duration=None, check=None, write_path=True) -> RunReport:
    """Run one scenario file and write its artifacts into ``out_dir``."""
    try:
        scenario = load_scenario(path)
        changes = {k: v for k, v in (("dt", dt), ("duration", duration)) if v is not None}
        if changes:
            scenario = scenario.replace(**changes).validate()
    except ScenarioError as exc:
        return RunReport(None, [], {}, EXIT_VALIDATION, f"invalid scenario {path}: {exc}")
    except OSError as exc:
        # load_scenario's message already names the path
        return RunReport(None, [], {}, EXIT_IO, str(exc))

    status, message, code = "ok", "", EXIT_OK
    try:
        log, metrics = run(scenario)
    except SimulationDiverged as exc:
        log = exc.log
        metrics = compute_metrics(log, scenario.controller.f_ref, scenario.dt) if log is not None and len(log) else None
        status, message, code = "diverged", str(exc), EXIT_DIVERGED

    checks = _checks_for(check, metrics) if metrics is not None and code == EXIT_OK else []
    if code == EXIT_OK and not all(c.passed for c in checks):
        code, status = EXIT_CHECK, "check-failed"
        message = "failed checks: " + ", ".join(f"{c.name}={c.observed:.4g}" for c in checks if not c.passed)

    out = Path(out_dir)
    artifacts = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        if log is not None:
            table = log_table(log)
            _write_csv(out / "log.csv", LOG_COLUMNS, table)
            artifacts["log"] = str(out / "log.csv")
            if write_path:
                _write_csv(out / "path.csv", PATH_COLUMNS, np.column_stack([log.t, log.x, log.x_ref]))
                artifacts["path"] = str(out / "path.csv")
        artifacts["summary"] = str(out / "summary.json")
        summary = _summary(scenario, log, status, metrics, checks, artifacts)
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    except OSError as exc:
        return RunReport(metrics, checks, artifacts, EXIT_IO, f"cannot write outputs to {out}: {exc}")
    return RunReport(metrics, checks, artifacts, code, message)


def _run_job(job) -> RunReport:
    return cmd_run(*job)


def _describe(path, report: RunReport) -> str:
    lines = [f"{path}: exit {report.exit_code}"]
    if report.metrics is not None:
        m = report.metrics
        ratio = ", ".join(f"{r:.3f}" for r in m.force_bound_violation_ratio)
        lines.append(f"  max |f| / f_ref per axis: [{ratio}]  contact {m.contact_duration:.3f} s"
                     f"  free-space rms {m.free_space_rms_error * 1e3:.3f} mm")
    for c in report.checks:
        lines.append(f"  {'PASS' if c.passed else 'FAIL'} {c.name}: {c.observed:.4g} (limit {c.threshold:g})")
    if report.message:
        lines.append(f"  {report.message}")
    return "\n".join(lines)


def main_run(args) -> int:
    files = list(args.files)
    if args.batch:
        files += [p.strip() for p in args.batch.split(",") if p.strip()]
    if not files:
        print("run: no scenario given", file=sys.stderr)
        return EXIT_VALIDATION
    out_root = Path(args.out)
    if len(files) == 1:
        jobs = [(files[0], out_root, args.dt, args.duration, args.check, not args.no_path)]
    else:
        # each run owns its own directory
        jobs = [(f, out_root / Path(f).stem, args.dt, args.duration, args.check, not args.no_path) for f in files]
    if len(jobs) > 1 and args.workers != 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            reports = list(pool.map(_run_job, jobs))
    else:
        reports = [_run_job(job) for job in jobs]
    for job, report in zip(jobs, reports):
        stream = sys.stdout if report.exit_code == EXIT_OK else sys.stderr
        print(_describe(job[0], report), file=stream)
    return max(r.exit_code for r in reports)


def main_verify(args) -> int:
    faults = Faults(printed_coriolis=args.inject_printed_coriolis, flipped_gravity=args.inject_flipped_gravity)
    names = [args.filter] if args.filter else None
    results = run_checks(names, faults)
    if not results:
        print(f"verify: no check matches {args.filter!r}", file=sys.stderr)
        return EXIT_VALIDATION
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    if failed:
        for r in failed:
            print(f"FAILED {r.name}: observed {r.observed:.6g}, expected {r.expected}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionforce", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate scenario files")
    p_run.add_argument("files", nargs="*", help="scenario file(s)")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.add_argument("--dt", type=float, help="override the step size in seconds")
    p_run.add_argument("--duration", type=float, help="override the duration in seconds")
    p_run.add_argument("--check", choices=("force-bound", "tracking", "all"), help="acceptance checks to apply")
    p_run.add_argument("--batch", help="comma-separated scenario files; outputs go to OUT/<stem>/")
    p_run.add_argument("--workers", type=int, default=None, help="parallel workers for batches")
    p_run.add_argument("--no-path", action="store_true", help="skip path.csv")
    p_run.set_defaults(func=main_run)

    p_verify = sub.add_parser("verify", help="run the oracle suite")
    p_verify.add_argument("--filter", help="only checks whose name contains this text")
    p_verify.add_argument("--inject-printed-coriolis", action="store_true", help=argparse.SUPPRESS)
    p_verify.add_argument("--inject-flipped-gravity", action="store_true", help=argparse.SUPPRESS)
    p_verify.set_defaults(func=main_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
