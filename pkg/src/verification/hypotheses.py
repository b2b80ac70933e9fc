"""
Certifiers for the hypotheses of the existence theory.

(H1)-(H3) concern the nonlinearity of the p-Laplacian problem; (h1)-(h7)
concern the operator T and the functional F of either problem. Checks on
finitely many samples only produce sampled evidence, reported as
``sampled-pass``; plain ``pass`` is reserved for checks that evaluate a finite
set of inequalities exactly.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from ..analysis.cones import direction_rng, sample_direction
from ..analysis.funcspace import GridFunction, Norm, make_uniform_grid, norm
from ..analysis.operators import F_eval, apply_T, phi_weight, plaplace_inverse, signed_power
from ..errors import DomainError, EstimationError, InvalidExponentError, TvSearchError
from ..logging_config import get_logger
from ..models.schemas import ConeSpec, Nonlinearity, ProblemSpec
from ..monitoring.metrics import track_hypothesis_check
from ..solver.nehari import CriticalKind, find_tv, radial_potential, scan_profile
from ..solver.parallel import ordered_map

logger = get_logger(__name__, component="hypotheses")

# Relative differences at or below this size count as ties
TIE_TOLERANCE = 1e-12


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SAMPLED_PASS = "sampled-pass"


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays inside witnesses to plain Python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class HypothesisReport:
    """Verdict on one condition with the numbers that support it."""
    condition: str
    verdict: Verdict
    witnesses: Dict[str, Any] = field(default_factory=dict)
    sample_count: int = 0
    seed: Optional[int] = None

    @property
    def holds(self) -> bool:
        return self.verdict in (Verdict.PASS, Verdict.SAMPLED_PASS)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "condition": self.condition,
            "verdict": self.verdict.value,
            "witnesses": _plain(self.witnesses),
            "sample_count": self.sample_count,
            "seed": self.seed,
        }
        if self.verdict == Verdict.SAMPLED_PASS:
            data["evidence"] = "sampled"
        return data


def _sampled(ok: bool) -> Verdict:
    return Verdict.SAMPLED_PASS if ok else Verdict.FAIL


def _tie(a: float, b: float) -> float:
    return TIE_TOLERANCE * max(1.0, abs(a), abs(b))


@dataclass
class CpEstimate:
    """Best constant c_p in |u|_p <= c_p |u|_{1,p} with the function attaining it."""
    value: float
    maximizer: GridFunction
    iterations: int
    start_values: List[float]


def _cp_start(grid, rng: np.random.Generator, first: bool) -> np.ndarray:
    m = grid.distance_to_boundary
    values = np.sin(np.pi * m)
    if first:
        return values
    values = rng.uniform(0.5, 1.0) * values
    for j in range(1, 4):
        values = values + rng.uniform(-0.3, 0.3) * np.sin((2 * j + 1) * np.pi * m)
    return values


def estimate_cp(
    p: float,
    n: int = 1025,
    starts: int = 5,
    seed: int = 0,
    max_iters: int = 500,
    tol: float = 1e-12,
) -> CpEstimate:
    """
    Estimate c_p, the smallest constant with |u|_p <= c_p |u|_{1,p} on W^{1,p}_0.

    The ratio |u|_p / |u|_{1,p} is driven up by the preconditioned ascent
    u <- normalize(J^{-1}(|u|^{p-2} u)) from several seeded symmetric starts;
    the best converged value wins.

    Raises:
        InvalidExponentError: If p <= 1
        EstimationError: If no start converges
    """
    if not p > 1:
        raise InvalidExponentError(f"exponent p must exceed 1, got p={p}")
    grid = make_uniform_grid(n)
    lp, w1p = Norm.lp(p), Norm.w1p(p)

    best: Optional[CpEstimate] = None
    values: List[float] = []
    for index in range(starts):
        rng = direction_rng(seed, index)
        u = GridFunction(grid, _cp_start(grid, rng, index == 0))
        ratio = norm(u, lp) / norm(u, w1p)
        converged = False
        for iteration in range(1, max_iters + 1):
            w = plaplace_inverse(GridFunction(grid, signed_power(u.values, p - 1.0)), p)
            u = w / norm(w, w1p)
            new_ratio = norm(u, lp) / norm(u, w1p)
            if abs(new_ratio - ratio) <= tol * new_ratio:
                ratio, converged = new_ratio, True
                break
            ratio = new_ratio
        if not converged:
            logger.debug("c_p start did not converge", start=index, ratio=ratio)
            continue
        values.append(ratio)
        if best is None or ratio > best.value:
            best = CpEstimate(value=ratio, maximizer=u, iterations=iteration, start_values=values)

    if best is None:
        raise EstimationError(f"c_p estimate for p={p} did not converge from any of {starts} starts")
    best.start_values = values
    logger.debug("Estimated c_p", p=p, value=best.value)
    return best


def compute_Phi(beta: float, p: float, nodes: int = 1025) -> float:
    """
    Phi = integral over [beta, 1/2] of phi(s), by composite Simpson.

    Raises:
        DomainError: If beta is outside (0, 1/2)
    """
    if not 0 < beta < 0.5:
        raise DomainError(f"beta must lie in (0, 1/2), got {beta}")
    s = np.linspace(beta, 0.5, nodes)
    return float(simpson(phi_weight(s, p), x=s))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@track_hypothesis_check("H1")
def check_H1(
    f: Nonlinearity,
    box: Tuple[float, float] = (10.0, 10.0),
    samples: int = 200,
    seed: int = 0,
) -> HypothesisReport:
    """
    Sampled check of (H1) on [0, x_max] x [0, y_max].

    In order: f >= 0, evenness in y, f nonincreasing in |y|, f nondecreasing
    in x, and f_inf nondecreasing. Weak monotonicity is accepted; the first
    violated property is returned as the witness.
    """
    x_max, y_max = box
    if not (x_max > 0 and y_max > 0):
        raise DomainError(f"sampling box must be positive, got {box}")
    rng = _rng(seed)
    x1, x2 = np.sort(rng.uniform(0.0, x_max, (2, samples)), axis=0)
    y1, y2 = np.sort(rng.uniform(0.0, y_max, (2, samples)), axis=0)

    def witness(prop: str, i: int, **extra) -> HypothesisReport:
        found = {"property": prop, "x": x1[i], "y": y1[i], **extra}
        logger.warning("(H1) fails", **_plain(found))
        return HypothesisReport("H1", Verdict.FAIL, found, samples, seed)

    f_plus, f_minus = f.evaluate(x1, y1), f.evaluate(x1, -y1)
    for i in range(samples):
        if f_plus[i] < 0 or f_minus[i] < 0:
            return witness("nonnegativity", i, value=min(f_plus[i], f_minus[i]))
    for i in range(samples):
        if abs(f_plus[i] - f_minus[i]) > _tie(f_plus[i], f_minus[i]):
            return witness("evenness", i, value=f_plus[i], mirrored=f_minus[i])

    f_far = f.evaluate(x1, y2)
    for i in range(samples):
        if f_far[i] - f_plus[i] > _tie(f_far[i], f_plus[i]):
            return witness("y-monotonicity", i, y_far=y2[i], value=f_plus[i], value_far=f_far[i])

    f_right = f.evaluate(x2, y1)
    for i in range(samples):
        if f_plus[i] - f_right[i] > _tie(f_plus[i], f_right[i]):
            return witness("x-monotonicity", i, x_right=x2[i], value=f_plus[i], value_right=f_right[i])

    inf_left, inf_right = f.f_inf(x1), f.f_inf(x2)
    for i in range(samples):
        if inf_left[i] - inf_right[i] > _tie(inf_left[i], inf_right[i]):
            return witness("f_inf-monotonicity", i, x_right=x2[i], value=inf_left[i], value_right=inf_right[i])

    return HypothesisReport("H1", Verdict.SAMPLED_PASS, {"box": list(box)}, samples, seed)


@track_hypothesis_check("H2")
def check_H2(
    f: Nonlinearity,
    p: float,
    r: float,
    R: float,
    beta: float,
    n: int = 1025,
    reversed: bool = False,
) -> HypothesisReport:
    """
    Evaluate the two endpoint inequalities of (H2).

    Standard form: f_0(r) < r^{p-1} / c_p and f_inf(R phi(beta)) > R^{p-1} / (2 Phi).
    Reversed form (energy minimum instead of maximum):
    f_inf(r phi(beta)) / (r phi(beta))^{p-1} > 1 / (2 Phi phi(beta)^{p-1}) and
    f_0(R) / R^{p-1} < 1 / c_p.
    Margins are positive exactly when the inequality holds.
    An annulus outside 0 < r < R < inf is reported as a failure.
    """
    if not 0 < r < R < math.inf:
        reason = f"(H2) needs 0 < r < R < inf, got r={r}, R={R}"
        logger.warning("(H2) fails", reason=reason)
        return HypothesisReport("H2", Verdict.FAIL, {"reason": reason, "r": r, "R": R}, 0, None)
    c_p = estimate_cp(p, n).value
    phi_beta = phi_weight(beta, p)
    Phi = compute_Phi(beta, p)

    if not reversed:
        inner_margin = r ** (p - 1) / c_p - f.f0(r)
        outer_margin = f.f_inf(R * phi_beta) - R ** (p - 1) / (2.0 * Phi)
        witnesses = {
            "f0_r": f.f0(r),
            "inner_bound": r ** (p - 1) / c_p,
            "f_inf_R_phi_beta": f.f_inf(R * phi_beta),
            "outer_bound": R ** (p - 1) / (2.0 * Phi),
        }
    else:
        x = r * phi_beta
        inner_margin = f.f_inf(x) / x ** (p - 1) - 1.0 / (2.0 * Phi * phi_beta ** (p - 1))
        outer_margin = 1.0 / c_p - f.f0(R) / R ** (p - 1)
        witnesses = {
            "f_inf_ratio_r": f.f_inf(x) / x ** (p - 1),
            "inner_bound": 1.0 / (2.0 * Phi * phi_beta ** (p - 1)),
            "f0_ratio_R": f.f0(R) / R ** (p - 1),
            "outer_bound": 1.0 / c_p,
        }

    witnesses.update({
        "c_p": c_p,
        "phi_beta": phi_beta,
        "Phi": Phi,
        "inner_margin": inner_margin,
        "outer_margin": outer_margin,
        "reversed": reversed,
    })
    ok = inner_margin > 0 and outer_margin > 0
    if not ok:
        logger.warning("(H2) fails", inner_margin=inner_margin, outer_margin=outer_margin)
    return HypothesisReport("H2", Verdict.PASS if ok else Verdict.FAIL, witnesses, 0, None)


@track_hypothesis_check("H3")
def check_H3(
    f: Nonlinearity,
    p: float,
    R: float,
    samples: int = 200,
    seed: int = 0,
    box: Tuple[float, float] = (1.0, 10.0),
    radii: int = 48,
) -> HypothesisReport:
    """
    Sampled check that t -> f(t x, t y) / t^{p-1} is strictly increasing on (0, R].

    Points have x in (0, x_max] and |y| <= y_max; t runs over log-spaced radii
    in [1e-6 R, R]. Steps within the tie tolerance count as failures.
    """
    if not 0 < R < math.inf:
        raise DomainError(f"(H3) needs a finite R > 0, got {R}")
    x_max, y_max = box
    rng = _rng(seed)
    xs = x_max * (1.0 - rng.uniform(0.0, 1.0, samples))
    ys = rng.uniform(-y_max, y_max, samples)
    t = np.geomspace(1e-6 * R, R, radii)

    for x, y in zip(xs, ys):
        ratio = f.evaluate(t * x, t * y) / t ** (p - 1.0)
        steps = np.diff(ratio)
        ties = TIE_TOLERANCE * np.maximum(np.abs(ratio[:-1]), np.abs(ratio[1:]))
        bad = np.flatnonzero(steps <= ties)
        if bad.size:
            i = int(bad[0])
            found = {"x": x, "y": y, "t1": t[i], "t2": t[i + 1], "ratio1": ratio[i], "ratio2": ratio[i + 1]}
            logger.warning("(H3) fails", **_plain(found))
            return HypothesisReport("H3", Verdict.FAIL, found, samples, seed)
    return HypothesisReport("H3", Verdict.SAMPLED_PASS, {"R": R, "box": list(box)}, samples, seed)


def _h1_direction(job: Tuple[ProblemSpec, ConeSpec, int, int, float, float]) -> Dict[str, Any]:
    prob, cone, index, seed, r, R_eff = job
    v = sample_direction(cone, prob.grid, index, seed)
    try:
        t_v = find_tv(prob, v, r, R_eff)
    except TvSearchError as exc:
        return {"index": index, "t_v": None, "failure": str(exc)}
    census = scan_profile(prob, v, r, R_eff).critical_points
    maxima = sum(1 for point in census if point.kind == CriticalKind.MAX)
    return {
        "index": index,
        "t_v": t_v,
        "census": [[point.t, point.kind.value] for point in census],
        "maxima": maxima,
        "failure": None if maxima == 1 else f"census has {maxima} maxima",
    }


@track_hypothesis_check("h1")
def check_h1(
    prob: ProblemSpec,
    cone: ConeSpec,
    r: float,
    R_eff: float,
    direction_count: int = 50,
    seed: int = 0,
    workers: int = 1,
) -> HypothesisReport:
    """
    Sampled check of (h1): every direction has a unique interior maximizer t_v.

    Reports the empirical r_0 = min t_v and R_0 = max t_v, the per-direction
    census and every failing direction with its reason.
    """
    jobs = [(prob, cone, index, seed, r, R_eff) for index in range(direction_count)]
    rows = ordered_map(_h1_direction, jobs, workers)
    failures = [{"index": row["index"], "reason": row["failure"]} for row in rows if row["failure"]]
    t_values = [row["t_v"] for row in rows if row["t_v"] is not None]

    witnesses: Dict[str, Any] = {
        "annulus": [r, R_eff],
        "mode": prob.mode.value,
        "t_v": [row["t_v"] for row in rows],
        "r0": min(t_values) if t_values else None,
        "R0": max(t_values) if t_values else None,
        "census_sizes": [len(row.get("census", [])) for row in rows],
    }
    if failures:
        witnesses["failures"] = failures
        logger.warning("(h1) fails", failures=len(failures), first=failures[0]["reason"])
    return HypothesisReport("h1", _sampled(not failures), witnesses, direction_count, seed)


@track_hypothesis_check("h1-endpoints")
def check_endpoint_signs(
    prob: ProblemSpec,
    cone: ConeSpec,
    r: float,
    R_eff: float,
    direction_count: int = 50,
    seed: int = 0,
) -> HypothesisReport:
    """
    Sufficient condition for (h1): the oriented potential is positive at r and
    negative at R_eff for every sampled direction.
    """
    inner, outer = [], []
    for index in range(direction_count):
        v = sample_direction(cone, prob.grid, index, seed)
        inner.append(radial_potential(prob, v, r))
        outer.append(radial_potential(prob, v, R_eff))
    ok = min(inner) > 0 and max(outer) < 0
    witnesses = {"min_potential_at_r": min(inner), "max_potential_at_R": max(outer), "annulus": [r, R_eff]}
    return HypothesisReport("h1-endpoints", _sampled(ok), witnesses, direction_count, seed)


def manifold_points(
    prob: ProblemSpec,
    cone: ConeSpec,
    t_values: Sequence[Optional[float]],
    seed: int,
) -> List[GridFunction]:
    """Points t_v v of U_b for the sampled directions whose t_v is known."""
    return [
        t_v * sample_direction(cone, prob.grid, index, seed)
        for index, t_v in enumerate(t_values)
        if t_v is not None
    ]


def _sample_manifold(prob: ProblemSpec, cone: ConeSpec, direction_count: int, seed: int) -> List[GridFunction]:
    r, R_eff = prob.r, prob.effective_R()
    points = []
    for index in range(direction_count):
        v = sample_direction(cone, prob.grid, index, seed)
        try:
            points.append(find_tv(prob, v, r, R_eff) * v)
        except TvSearchError:
            continue
    return points


@track_hypothesis_check("h2")
def check_h2(
    prob: ProblemSpec,
    cone: ConeSpec,
    direction_count: int = 50,
    seed: int = 0,
    points: Optional[Sequence[GridFunction]] = None,
) -> HypothesisReport:
    """
    Sampled check of (h2): |T(u)| stays away from zero on U_b.

    ``points`` may carry precomputed points of U_b; otherwise they are
    sampled. Directions without t_v are skipped; no point at all is a failure.
    """
    if points is None:
        points = _sample_manifold(prob, cone, direction_count, seed)
    if not points:
        logger.warning("(h2) has no points of U_b to test")
        return HypothesisReport("h2", Verdict.FAIL, {"reason": "no point of U_b located"}, 0, seed)

    T_norms = [norm(apply_T(prob, u), cone.norm) for u in points]
    u_norms = [norm(u, cone.norm) for u in points]
    threshold = prob.tolerances.h2_threshold
    witnesses = {
        "min_norm_T_u": min(T_norms),
        "min_norm_u": min(u_norms),
        "threshold": threshold,
        "norm": cone.norm.label(),
    }
    ok = min(T_norms) > threshold
    if not ok:
        witnesses["failing_index"] = int(np.argmin(T_norms))
        logger.warning("(h2) fails", min_norm_T_u=min(T_norms))
    return HypothesisReport("h2", _sampled(ok), witnesses, len(points), seed)


def _scaling_roots(prob: ProblemSpec, u: GridFunction, w: GridFunction) -> List[float]:
    """Zeros in t of F(t u, u, w) over [1e-3, 1e3]."""
    def g(t: float) -> float:
        return F_eval(prob, t * u, u, w)

    t = np.geomspace(1e-3, 1e3, 60)
    values = np.array([g(s) for s in t])
    roots = [float(t[i]) for i in np.flatnonzero(values == 0.0)]
    for i in np.flatnonzero(values[:-1] * values[1:] < 0):
        roots.append(float(brentq(g, t[i], t[i + 1], xtol=1e-15)))
    return sorted(roots)


@track_hypothesis_check("scaling")
def check_scaling(
    prob: ProblemSpec,
    mode: str,
    samples: int = 20,
    seed: int = 0,
    points: Optional[Sequence[GridFunction]] = None,
    tol: float = 1e-9,
) -> HypothesisReport:
    """
    Sampled check of (h3), (h4) or (h5).

    Solves F(t u, u, u/|u|) = 0 for t and checks t = 1, t >= 1 or t <= 1.
    Zero functions are skipped.
    """
    if mode not in ("h3", "h4", "h5"):
        raise ValueError(f"scaling mode must be h3, h4 or h5, got {mode!r}")
    cone = prob.cone_spec()
    if points is None:
        rng = _rng(seed)
        radii = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), samples))
        points = [
            radius * sample_direction(cone, prob.grid, index, seed)
            for index, radius in enumerate(radii)
        ]

    skipped, all_roots, failures = 0, [], []
    for index, u in enumerate(points):
        size = norm(u, cone.norm)
        if not size > 0:
            skipped += 1
            continue
        roots = _scaling_roots(prob, u, u / size)
        all_roots.extend(roots)
        if mode == "h3":
            bad = [t for t in roots if abs(t - 1.0) > tol]
        elif mode == "h4":
            bad = [t for t in roots if t < 1.0 - tol]
        else:
            bad = [t for t in roots if t > 1.0 + tol]
        if bad:
            failures.append({"index": index, "roots": bad})

    witnesses = {
        "roots_min": min(all_roots) if all_roots else None,
        "roots_max": max(all_roots) if all_roots else None,
        "skipped": skipped,
    }
    if failures:
        witnesses["failures"] = failures
    ok = len(points) > skipped and not failures
    return HypothesisReport(mode, _sampled(ok), witnesses, len(points) - skipped, seed)


@track_hypothesis_check("growth")
def check_growth(
    prob: ProblemSpec,
    cone: ConeSpec,
    mode: str,
    points: Sequence[GridFunction],
    seed: Optional[int] = None,
) -> HypothesisReport:
    """
    Sampled check of (h6) |T(u)| <= |u| or (h7) |T(u)| >= |u| on points of U_b.
    """
    if mode not in ("h6", "h7"):
        raise ValueError(f"growth mode must be h6 or h7, got {mode!r}")
    ratios = []
    failures = []
    for index, u in enumerate(points):
        size_u = norm(u, cone.norm)
        size_T = norm(apply_T(prob, u), cone.norm)
        ratios.append(size_T / size_u)
        slack = TIE_TOLERANCE * size_u
        if (mode == "h6" and size_T > size_u + slack) or (mode == "h7" and size_T < size_u - slack):
            failures.append(index)

    witnesses = {
        "min_ratio": min(ratios) if ratios else None,
        "max_ratio": max(ratios) if ratios else None,
    }
    if failures:
        witnesses["failing_indices"] = failures
    ok = bool(points) and not failures
    return HypothesisReport(mode, _sampled(ok), witnesses, len(points), seed)


BRANCHES = {
    "h2+h3": ("h1", "h2", "h3"),
    "h2+h4+h6": ("h1", "h2", "h4", "h6"),
    "h2+h5+h7": ("h1", "h2", "h5", "h7"),
}


def theorem_branches(reports: Sequence[HypothesisReport]) -> Dict[str, Any]:
    """Which sets of conditions of the existence theorem the evidence supports."""
    holds = {report.condition: report.holds for report in reports}
    supported = {
        name: all(holds.get(condition, False) for condition in conditions)
        for name, conditions in BRANCHES.items()
    }
    return {
        "branches": supported,
        "applicable": sorted(name for name, ok in supported.items() if ok),
    }
