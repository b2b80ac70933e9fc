"""
Radial energy along rays, the per-direction maximizer t_v, the critical-point
census, the Nehari-manifold fixed-point search, annulus scans and a Picard
iteration used as an independent check.

All energies and potentials are oriented by the problem's mode: in minimize
mode the functional F is negated, so "maximum" always refers to the oriented
energy.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.optimize import bisect, brentq, minimize_scalar

from ..analysis.cones import MembershipReport, check_membership, normalize, sample_direction
from ..analysis.funcspace import GridFunction, Norm, norm
from ..analysis.operators import F_eval, apply_T
from ..errors import AmbiguousMaximumError, BoundaryMaximumError, DomainError, TvSearchError
from ..logging_config import get_logger
from ..models.schemas import ConeSpec, Mode, ProblemSpec
from ..monitoring.metrics import get_metrics_collector

logger = get_logger(__name__, component="nehari")

DEFAULT_SCAN_SAMPLES = 256
# Inner end of the log-spaced scan when r = 0, relative to the outer radius
_LOG_SCAN_FLOOR = 1e-12
_LOG_SCAN_RATIO = 100.0


class CriticalKind(str, Enum):
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class CriticalPoint:
    t: float
    kind: CriticalKind


@dataclass
class RadialProfile:
    """Radial potential and energy of one direction on a grid of radii."""
    problem: ProblemSpec
    direction: GridFunction
    t: np.ndarray
    potential: np.ndarray
    energy: np.ndarray
    critical_points: List[CriticalPoint] = field(default_factory=list)


def orientation(prob: ProblemSpec) -> float:
    return 1.0 if prob.mode == Mode.MAXIMIZE else -1.0


def radial_potential(prob: ProblemSpec, v: GridFunction, t: float) -> float:
    """
    Oriented radial potential F(T(tv), tv, v), the derivative of E(v) at t.

    Raises:
        DomainError: If t is negative
    """
    if t < 0:
        raise DomainError(f"radial potential needs t >= 0, got {t}")
    u = t * v
    value = F_eval(prob, apply_T(prob, u), u, v)
    get_metrics_collector().record_potential_evaluation(prob.operator.value)
    return orientation(prob) * value


def _segment_energy(prob: ProblemSpec, v: GridFunction, a: float, b: float, panels: int = 8) -> float:
    """Composite Simpson integral of the potential over [a, b]."""
    if b <= a:
        return 0.0
    s = np.linspace(a, b, panels + 1)
    values = [radial_potential(prob, v, x) for x in s]
    return float(simpson(values, x=s))


def _check_radii(t: np.ndarray) -> None:
    if t.ndim != 1 or t.size == 0:
        raise DomainError("radius grid must be a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(t)) or t[0] < 0:
        raise DomainError("radii must be finite and non-negative")
    if np.any(np.diff(t) <= 0):
        raise DomainError("radii must be strictly increasing")


def energy_profile(
    prob: ProblemSpec,
    v: GridFunction,
    t_grid: Sequence[float],
    panels: int = 8,
) -> RadialProfile:
    """
    Sample the radial potential and the energy E(v)(t) = int_0^t potential.

    The energy is accumulated by composite Simpson on ``panels`` sub-intervals
    between consecutive radii, anchored at t = 0. The census is filled in.

    Raises:
        DomainError: If the radii are not increasing or leave [r, R_eff]
    """
    t = np.asarray(t_grid, dtype=float)
    _check_radii(t)
    if t[0] < prob.r or t[-1] > prob.effective_R():
        raise DomainError(
            f"radii [{t[0]:.6g}, {t[-1]:.6g}] leave the annulus [{prob.r:.6g}, {prob.effective_R():.6g}]"
        )

    potential = np.array([radial_potential(prob, v, s) for s in t])
    steps = [_segment_energy(prob, v, 0.0, t[0], panels)]
    steps.extend(_segment_energy(prob, v, a, b, panels) for a, b in zip(t[:-1], t[1:]))
    energy = np.cumsum(steps)

    profile = RadialProfile(problem=prob, direction=v, t=t, potential=potential, energy=energy)
    profile.critical_points = critical_census(profile)
    return profile


def critical_census(profile: RadialProfile) -> List[CriticalPoint]:
    """
    Locate every sign change of the potential between adjacent samples.

    Each change is refined by bisection to the census tolerance; + to - is a
    maximum of the energy and - to + a minimum.
    """
    prob, v = profile.problem, profile.direction
    t, potential = profile.t, profile.potential
    if t.size < 3:
        return []

    tol = prob.tolerances.census
    points: List[CriticalPoint] = []
    last: Optional[int] = None
    for i, value in enumerate(potential):
        if value == 0.0:
            continue
        if last is not None and np.sign(value) != np.sign(potential[last]):
            a, b = float(t[last]), float(t[i])
            root = bisect(
                lambda s: radial_potential(prob, v, s), a, b,
                xtol=tol * max(1.0, abs(b)),
            )
            kind = CriticalKind.MAX if potential[last] > 0 else CriticalKind.MIN
            points.append(CriticalPoint(t=float(root), kind=kind))
        last = i
    return points


def scan_radii(r: float, R_eff: float, samples: int = DEFAULT_SCAN_SAMPLES) -> np.ndarray:
    """
    Coarse radii for the t_v search.

    Log-spaced when r = 0 (then t = 0 itself is prepended) or R/r > 100,
    linear otherwise. Both ends are always included.
    """
    if not (0 <= r < R_eff < math.inf):
        raise DomainError(f"search needs 0 <= r < R_eff < inf, got r={r}, R_eff={R_eff}")
    if r == 0:
        return np.concatenate(([0.0], np.geomspace(R_eff * _LOG_SCAN_FLOOR, R_eff, samples - 1)))
    if R_eff / r > _LOG_SCAN_RATIO:
        return np.geomspace(r, R_eff, samples)
    return np.linspace(r, R_eff, samples)


def _scan_energy(prob: ProblemSpec, v: GridFunction, t: np.ndarray, potential: np.ndarray) -> np.ndarray:
    anchor = _segment_energy(prob, v, 0.0, float(t[0]))
    return anchor + cumulative_simpson(potential, x=t, initial=0.0)


def scan_profile(
    prob: ProblemSpec,
    v: GridFunction,
    r: float,
    R_eff: float,
    samples: int = DEFAULT_SCAN_SAMPLES,
) -> RadialProfile:
    """Profile on the coarse search radii, energy by cumulative Simpson, census filled in."""
    t = scan_radii(r, R_eff, samples)
    potential = np.array([radial_potential(prob, v, s) for s in t])
    profile = RadialProfile(
        problem=prob,
        direction=v,
        t=t,
        potential=potential,
        energy=_scan_energy(prob, v, t, potential),
    )
    profile.critical_points = critical_census(profile)
    return profile


def _check_unique_maximum(t: np.ndarray, energy: np.ndarray, k: int, tol: float) -> None:
    best = energy[k]
    slack = tol * max(1.0, abs(best))
    for j in range(energy.size):
        if abs(j - k) <= 1:
            continue
        left = energy[j - 1] if j > 0 else -math.inf
        right = energy[j + 1] if j + 1 < energy.size else -math.inf
        is_peak = energy[j] >= left and energy[j] >= right
        if is_peak and best - energy[j] <= slack:
            raise AmbiguousMaximumError(float(t[k]), float(t[j]), float(best))


def _golden_refine(prob: ProblemSpec, v: GridFunction, a: float, mid: float, b: float) -> float:
    """Golden-section search for the energy maximum inside the scan bracket."""
    def gain(s: float) -> float:
        return _segment_energy(prob, v, a, s, panels=4)

    if not gain(mid) > max(0.0, gain(b)):
        return mid
    result = minimize_scalar(
        lambda s: -gain(s),
        bracket=(a, mid, b),
        method="golden",
        options={"xtol": prob.tolerances.tv},
    )
    t_golden = float(result.x)
    return t_golden if a < t_golden < b else mid


def find_tv(
    prob: ProblemSpec,
    v: GridFunction,
    r: float,
    R_eff: float,
    samples: int = DEFAULT_SCAN_SAMPLES,
) -> float:
    """
    Interior maximizer t_v of the (oriented) radial energy on [r, R_eff].

    A coarse scan brackets the global maximum, golden-section search refines
    it and, when the potential changes sign across the bracket, Brent's method
    polishes it to the zero of the potential.

    Raises:
        BoundaryMaximumError: If the maximum sits at r or R_eff
        AmbiguousMaximumError: If two separated samples tie for the maximum
    """
    metrics = get_metrics_collector()
    t = scan_radii(r, R_eff, samples)
    potential = np.array([radial_potential(prob, v, s) for s in t])
    energy = _scan_energy(prob, v, t, potential)

    k = int(np.argmax(energy))
    if k == 0 or k == t.size - 1:
        metrics.record_tv_search("boundary")
        raise BoundaryMaximumError(float(t[k]), r, R_eff)
    try:
        _check_unique_maximum(t, energy, k, prob.tolerances.census)
    except AmbiguousMaximumError:
        metrics.record_tv_search("ambiguous")
        raise

    a, b = float(t[k - 1]), float(t[k + 1])
    t_v = _golden_refine(prob, v, a, float(t[k]), b)

    if potential[k - 1] > 0 > potential[k + 1]:
        root = brentq(
            lambda s: radial_potential(prob, v, s), a, b,
            xtol=1e-13 * max(1.0, b),
        )
        if abs(root - t_v) > 1e-6 * max(1.0, root):
            logger.debug("Golden and sign-change maximizers differ", golden=t_v, root=root)
        t_v = float(root)

    metrics.record_tv_search("interior")
    return t_v


def tv_by_sign_change(
    prob: ProblemSpec,
    v: GridFunction,
    r: float,
    R_eff: float,
    samples: int = DEFAULT_SCAN_SAMPLES,
) -> float:
    """
    t_v as the zero of the potential where it turns from positive to negative.

    Cross-check for ``find_tv``; among several such zeros the one with the
    highest energy is returned.

    Raises:
        BoundaryMaximumError: If the potential never turns from + to -
    """
    t = scan_radii(r, R_eff, samples)
    potential = np.array([radial_potential(prob, v, s) for s in t])
    energy = _scan_energy(prob, v, t, potential)

    best: Optional[Tuple[float, float]] = None
    for i in np.flatnonzero((potential[:-1] > 0) & (potential[1:] < 0)):
        a, b = float(t[i]), float(t[i + 1])
        root = bisect(lambda s: radial_potential(prob, v, s), a, b, xtol=1e-13 * max(1.0, b))
        height = energy[i] + _segment_energy(prob, v, a, root)
        if best is None or height > best[1]:
            best = (float(root), float(height))

    if best is None:
        k = int(np.argmax(energy))
        raise BoundaryMaximumError(float(t[k]), r, R_eff)
    return best[0]


@dataclass
class NehariSolveReport:
    """
    Outcome of a Nehari-manifold solve on one annulus.

    ``residual`` is measured in the cone's norm; converged means
    residual <= residual tolerance. Failed searches carry ``failure`` and no
    solution.
    """
    annulus: Tuple[float, float]
    mode: Mode
    converged: bool
    iterations: int
    damping: float
    u: Optional[GridFunction] = None
    direction: Optional[GridFunction] = None
    t_v: Optional[float] = None
    T_u: Optional[GridFunction] = None
    residual: Optional[float] = None
    residual_sup: Optional[float] = None
    residual_w1p: Optional[float] = None
    norm_u: Optional[float] = None
    inner_ok: Optional[bool] = None
    outer_ok: Optional[bool] = None
    membership: Optional[MembershipReport] = None
    energy: Optional[float] = None
    nehari_defect: Optional[float] = None
    failure: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.failure is None and self.converged

    @classmethod
    def failed(cls, annulus: Tuple[float, float], mode: Mode, reason: str) -> "NehariSolveReport":
        return cls(annulus=annulus, mode=mode, converged=False, iterations=0, damping=0.0, failure=reason)

    def to_dict(self) -> Dict:
        data = {
            "annulus": [float(self.annulus[0]), float(self.annulus[1])],
            "mode": self.mode.value,
            "converged": self.converged,
            "iterations": self.iterations,
            "damping": self.damping,
            "failure": self.failure,
        }
        if self.u is not None:
            data.update({
                "t_v": self.t_v,
                "norm_u": self.norm_u,
                "sup_u": float(np.max(np.abs(self.u.values))),
                "residual": self.residual,
                "residual_sup": self.residual_sup,
                "residual_w1p": self.residual_w1p,
                "inner_ok": self.inner_ok,
                "outer_ok": self.outer_ok,
                "membership": self.membership.to_dict(),
                "energy": self.energy,
                "nehari_defect": self.nehari_defect,
            })
        return data


def _residuals(prob: ProblemSpec, Tu: GridFunction, u: GridFunction) -> Tuple[float, float]:
    diff = Tu - u
    return norm(diff, Norm.sup()), norm(diff, Norm.w1p(prob.p))


def nehari_solve(
    prob: ProblemSpec,
    cone: Optional[ConeSpec] = None,
    v0: Optional[GridFunction] = None,
    damping: float = 0.5,
    max_iters: int = 500,
) -> NehariSolveReport:
    """
    Search the Nehari-type manifold for a fixed point of T.

    Iterates v <- normalize(v + damping (normalize(T(t_v v)) - v)), halving the
    damping after three consecutive increases of the direction change. Stops
    when the residual |T(u) - u| (cone norm) reaches the tolerance, when the
    direction stops moving, or after ``max_iters`` updates. Non-convergence is
    reported, not raised.

    Raises:
        TvSearchError: If t_v cannot be located for some iterate
    """
    cone = cone or prob.cone_spec()
    if not 0 < damping <= 1:
        raise DomainError(f"damping must lie in (0, 1], got {damping}")
    if v0 is None:
        v0 = sample_direction(cone, prob.grid, 0, seed=0)

    r, R_eff = prob.r, prob.effective_R()
    tol = prob.tolerances.residual
    v = normalize(v0, cone)
    omega = damping
    iterations = 0
    changes: List[float] = []
    settled = False

    while True:
        t_v = find_tv(prob, v, r, R_eff)
        u = t_v * v
        Tu = apply_T(prob, u)
        residual = norm(Tu - u, cone.norm)
        logger.debug("Nehari iteration", iteration=iterations, t_v=t_v, residual=residual, damping=omega)
        if residual <= tol or settled or iterations >= max_iters:
            break

        v_next = normalize(v + omega * (normalize(Tu, cone) - v), cone)
        change = norm(v_next - v, cone.norm)
        v = v_next
        iterations += 1

        changes.append(change)
        if len(changes) >= 4 and changes[-1] > changes[-2] > changes[-3] > changes[-4]:
            omega *= 0.5
            changes.clear()
            logger.info("Oscillation detected, halving damping", damping=omega, iteration=iterations)
        if change <= prob.tolerances.direction:
            settled = True

    residual_sup, residual_w1p = _residuals(prob, Tu, u)
    norm_u = norm(u, cone.norm)
    converged = residual <= tol
    report = NehariSolveReport(
        annulus=(r, R_eff),
        mode=prob.mode,
        converged=converged,
        iterations=iterations,
        damping=omega,
        u=u,
        direction=v,
        t_v=t_v,
        T_u=Tu,
        residual=residual,
        residual_sup=residual_sup,
        residual_w1p=residual_w1p,
        norm_u=norm_u,
        inner_ok=r < norm_u,
        outer_ok=norm_u < R_eff,
        membership=check_membership(u, cone),
        energy=orientation(prob) * _segment_energy(prob, v, 0.0, t_v, panels=64),
        nehari_defect=F_eval(prob, Tu, u, u / norm_u),
    )

    get_metrics_collector().record_nehari_solve(iterations, converged, residual)
    log = logger.info if converged else logger.warning
    log(
        "Nehari solve finished",
        converged=converged,
        iterations=iterations,
        t_v=t_v,
        residual=residual,
        annulus=[r, R_eff],
    )
    return report


def multiplicity_scan(
    prob: ProblemSpec,
    annuli: Sequence[Tuple[float, float]],
    cone: Optional[ConeSpec] = None,
    v0: Optional[GridFunction] = None,
    damping: float = 0.5,
    max_iters: int = 500,
) -> List[NehariSolveReport]:
    """
    Run one Nehari solve per annulus; failures are recorded and the scan goes on.

    Raises:
        DomainError: If the annuli are not ordered and disjoint up to touching
    """
    annuli = [(float(a), float(b)) for a, b in annuli]
    for (_, outer), (inner, _) in zip(annuli, annuli[1:]):
        if outer > inner:
            raise DomainError(f"annuli must be ordered and disjoint, {outer} > {inner}")

    cone = cone or prob.cone_spec()
    start = v0 if v0 is not None else sample_direction(cone, prob.grid, 0, seed=0)
    reports = []
    for r_i, R_i in annuli:
        sub = prob.with_updates(r=r_i, R=R_i)
        try:
            report = nehari_solve(sub, cone, start, damping=damping, max_iters=max_iters)
        except TvSearchError as exc:
            logger.warning("Annulus without interior maximizer", annulus=[r_i, R_i], reason=str(exc))
            report = NehariSolveReport.failed((r_i, sub.effective_R()), sub.mode, str(exc))
        reports.append(report)
    return reports


@dataclass
class PicardResult:
    u: GridFunction
    converged: bool
    iterations: int
    last_change: float
    diverged: bool = False


def picard_oracle(
    prob: ProblemSpec,
    u0: GridFunction,
    tol: float = 1e-12,
    max_iters: int = 1000,
) -> PicardResult:
    """
    Plain iteration u <- T(u) until the sup change drops to ``tol``.

    Divergence (norm above 10 R_eff, or overflow) and exhausting ``max_iters``
    are reported through the result flags.
    """
    limit = 10.0 * prob.effective_R()
    cone_norm = prob.cone_spec().norm
    u = u0
    change = math.inf
    for iteration in range(1, max_iters + 1):
        try:
            with np.errstate(over="raise", invalid="raise"):
                nxt = apply_T(prob, u)
        except (FloatingPointError, ValueError):
            logger.info("Picard iteration overflowed", iteration=iteration)
            return PicardResult(u, False, iteration, change, diverged=True)
        change = norm(nxt - u, Norm.sup())
        u = nxt
        if change <= tol:
            return PicardResult(u, True, iteration, change)
        if norm(u, cone_norm) > limit:
            logger.info("Picard iteration diverged", iteration=iteration)
            return PicardResult(u, False, iteration, change, diverged=True)
    return PicardResult(u, False, max_iters, change)
