"""
Command dispatch and artifact emission.

Every command writes ``config.normalized.yaml`` next to its outputs. Reports
are JSON with sorted keys; CSV floats use ``%.17g``. Identical config and seed
give byte-identical files. Exit codes:

    0  success / every checked condition holds
    1  usage or configuration error
    2  some hypothesis fails
    3  the Nehari solve did not converge or found no interior maximizer
"""
import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..analysis.cones import sample_direction
from ..errors import ConfigError, NehariError, TvSearchError
from ..logging_config import TimedOperation, get_logger
from ..models.schemas import NonlinearityKind, OperatorKind
from ..monitoring.metrics import get_metrics_collector, reset_metrics_collector, track_command_duration
from ..solver.nehari import (
    NehariSolveReport,
    RadialProfile,
    energy_profile,
    multiplicity_scan,
    nehari_solve,
    scan_profile,
)
from ..verification.hypotheses import (
    HypothesisReport,
    check_endpoint_signs,
    check_growth,
    check_H1,
    check_H2,
    check_H3,
    check_h1,
    check_h2,
    check_scaling,
    manifold_points,
    theorem_branches,
)
from ..verification.kernel_estimates import certify_kernel_intervals
from .config import Command, RunConfig, dump_config

logger = get_logger(__name__, component="runner")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_HYPOTHESIS_FAILED = 2
EXIT_NOT_CONVERGED = 3


def _fmt(value: float) -> str:
    return "%.17g" % value


def _json_safe(value: Any) -> Any:
    """Plain JSON values; non-finite floats become strings so the output stays valid JSON."""
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def write_json(data: Dict[str, Any], path: Path) -> Path:
    """Deterministic JSON: sorted keys, two-space indent, floats by repr."""
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(_json_safe(data), handle, sort_keys=True, indent=2, allow_nan=False)
            handle.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_csv(profile: RadialProfile, path) -> Path:
    """
    Write ``t,potential,energy`` rows in sample order, plus the critical
    points as ``t,kind`` rows in the companion ``*.census.csv``.
    """
    path = Path(path)
    census_path = path.with_suffix(".census.csv")
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["t", "potential", "energy"])
            for t, potential, energy in zip(profile.t, profile.potential, profile.energy):
                writer.writerow([_fmt(t), _fmt(potential), _fmt(energy)])
        with open(census_path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["t", "kind"])
            for point in sorted(profile.critical_points, key=lambda c: c.t):
                writer.writerow([_fmt(point.t), point.kind.value])
    except OSError as exc:
        raise OSError(f"cannot write profile CSV {path}: {exc}") from exc
    return path


def _emit_solution(report: NehariSolveReport, path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", "u", "T_u"])
        for t, u, Tu in zip(report.u.t, report.u.values, report.T_u.values):
            writer.writerow([_fmt(t), _fmt(u), _fmt(Tu)])
    return path


def _run_profile(config: RunConfig, out: Path) -> int:
    prob, cone, settings = config.problem, config.cone_spec, config.run
    r, R_eff = prob.r, prob.effective_R()
    for index in range(settings.directions):
        v = sample_direction(cone, prob.grid, index, settings.seed)
        if settings.profile_t is not None:
            profile = energy_profile(prob, v, np.asarray(settings.profile_t, dtype=float))
        else:
            profile = scan_profile(prob, v, r, R_eff, settings.profile_samples)
        emit_csv(profile, out / f"profile_{index}.csv")
    logger.info("Profiles written", directions=settings.directions, out=str(out))
    return EXIT_OK


def _run_solve(config: RunConfig, out: Path) -> int:
    prob, cone, settings = config.problem, config.cone_spec, config.run
    v0 = sample_direction(cone, prob.grid, 0, settings.seed)
    try:
        report = nehari_solve(prob, cone, v0, damping=settings.damping, max_iters=settings.max_iters)
    except TvSearchError as exc:
        logger.warning("Solve aborted", reason=str(exc))
        report = NehariSolveReport.failed((prob.r, prob.effective_R()), prob.mode, str(exc))
    write_json(report.to_dict(), out / "solve_report.json")
    if report.u is not None:
        _emit_solution(report, out / "solution.csv")
    return EXIT_OK if report.succeeded else EXIT_NOT_CONVERGED


def _verify_reports(config: RunConfig) -> List[HypothesisReport]:
    prob, cone, settings = config.problem, config.cone_spec, config.run
    seed, count = settings.seed, settings.directions
    r, R_eff = prob.r, prob.effective_R()
    reports: List[HypothesisReport] = []

    if prob.operator == OperatorKind.PLAPLACIAN:
        f = prob.nonlinearity
        reports.append(check_H1(f, tuple(settings.H1_box), settings.samples, seed))
        reports.append(check_H2(f, prob.p, r, R_eff, prob.beta, prob.n, reversed=settings.reversed_H2))
        reports.append(check_H3(f, prob.p, R_eff, settings.samples, seed))

    h1 = check_h1(prob, cone, r, R_eff, count, seed, settings.workers)
    reports.append(h1)
    reports.append(check_endpoint_signs(prob, cone, r, R_eff, count, seed))
    points = manifold_points(prob, cone, h1.witnesses["t_v"], seed)
    reports.append(check_h2(prob, cone, count, seed, points=points))
    for mode in ("h3", "h4", "h5"):
        reports.append(check_scaling(prob, mode, seed=seed, points=points))
    for mode in ("h6", "h7"):
        reports.append(check_growth(prob, cone, mode, points, seed))

    if prob.operator == OperatorKind.KERNEL and prob.nonlinearity.kind == NonlinearityKind.QUADRATIC:
        reports.append(certify_kernel_intervals(count, seed, prob.n, prob.nonlinearity, settings.workers))
    return reports


# Conditions whose failure fails the run; the rest are reported as branch evidence
REQUIRED = ("H1", "H2", "H3", "h1", "h2", "h3", "kernel-intervals")


def _run_verify(config: RunConfig, out: Path) -> int:
    reports = _verify_reports(config)
    summary = theorem_branches(reports)
    write_json(
        {"reports": [report.to_dict() for report in reports], "theorem": summary},
        out / "verify_report.json",
    )
    failed = [report.condition for report in reports if report.condition in REQUIRED and not report.holds]
    if failed:
        logger.warning("Hypotheses fail", conditions=failed)
        return EXIT_HYPOTHESIS_FAILED
    return EXIT_OK


def _run_scan(config: RunConfig, out: Path) -> int:
    prob, cone, settings = config.problem, config.cone_spec, config.run
    v0 = sample_direction(cone, prob.grid, 0, settings.seed)
    reports = multiplicity_scan(prob, settings.annuli, cone, v0, settings.damping, settings.max_iters)
    write_json({"annuli": [report.to_dict() for report in reports]}, out / "scan_report.json")
    return EXIT_OK if all(report.succeeded for report in reports) else EXIT_NOT_CONVERGED


_COMMANDS = {
    Command.PROFILE: _run_profile,
    Command.SOLVE: _run_solve,
    Command.VERIFY: _run_verify,
    Command.SCAN: _run_scan,
}


def run(config: RunConfig, metrics_path: Optional[Path] = None) -> int:
    """
    Execute the configured command and return its exit code.

    Errors never escape for a valid config: configuration problems give 1,
    search failures during a solve give 3.
    """
    reset_metrics_collector()
    command = config.run.command
    out = Path(config.run.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        logger.error("Output directory is not writable", out=str(out), error=str(exc))
        return EXIT_USAGE
    dump_config(config, out / "config.normalized.yaml")

    try:
        with TimedOperation(logger, f"{command.value} command", seed=config.run.seed):
            with track_command_duration(command.value):
                code = _COMMANDS[command](config, out)
    except ConfigError as exc:
        logger.error("Invalid configuration", error=str(exc))
        code = EXIT_USAGE
    except TvSearchError as exc:
        logger.error("No interior maximizer", error=str(exc))
        code = EXIT_NOT_CONVERGED
    except NehariError as exc:
        logger.error("Command failed", error=str(exc))
        code = EXIT_USAGE

    if metrics_path is not None:
        get_metrics_collector().write_metrics(metrics_path)
    return code
