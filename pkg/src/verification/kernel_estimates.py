"""
Analytic apparatus of the Green-kernel problem.

For f(x) = a2 x^2 + a1 x + a0 and a unit sup-norm direction v the radial
potential is the quadratic -b2 t^2 + b1 t - b0 with

    b2 = a2 alpha_v(2),  b1 = |v|_2^2 - a1 alpha_v(1),  b0 = a0 alpha_v(0),

where alpha_v(k) is the double integral of k(t, s) v(s)^k v(t). The radial
energy is the cubic g(t) = -b2 t^3/3 + b1 t^2/2 - b0 t.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from ..analysis.cones import sample_direction
from ..analysis.funcspace import GridFunction, integrate, integrate_values, make_uniform_grid
from ..analysis.operators import green_integral
from ..errors import DomainError
from ..logging_config import get_logger
from ..models.schemas import ConeKind, ConeSpec, Nonlinearity, NonlinearityKind
from ..monitoring.metrics import track_hypothesis_check
from ..solver.parallel import ordered_map
from .hypotheses import HypothesisReport, Verdict

logger = get_logger(__name__, component="kernel_estimates")

# Certified boxes for (b2, b1, b0) over unit kernel-cone directions
COEFFICIENT_BOXES: Tuple[Tuple[float, float], ...] = (
    (4.88e-6, 8.34e-4),
    (3e-2, 1.0),
    (7.81e-3, 8.34e-2),
)
DISCRIMINANT_FLOOR = 4e-4
T_PLUS_RANGE = (10.0, 1e7)
L2_SQUARED_FLOOR = 1.0 / 32.0
# Observed worst plain-trapezoid gap is about 0.7 h^2; Richardson only lowers it
QUADRATURE_GAP_CONSTANT = 1.0


def alpha_moments(v: GridFunction, k: int) -> float:
    """
    alpha_v(k) = double integral over [0, 1]^2 of k(t, s) v(s)^k v(t).

    Row integrals are split at the diagonal, then integrated by Simpson.
    """
    if k < 0:
        raise DomainError(f"moment order must be non-negative, got {k}")
    inner = green_integral(v.values ** k, v.grid)
    return integrate_values(v.values * inner, v.grid)


def _trapezoid_moment(values: np.ndarray, t: np.ndarray, h: float, k: int) -> float:
    g = values ** k
    lower = cumulative_trapezoid(t * g, dx=h, initial=0.0)
    upper = cumulative_trapezoid((1.0 - t) * g, dx=h, initial=0.0)
    inner = (1.0 - t) * lower + t * (upper[-1] - upper)
    return float(trapezoid(values * inner, dx=h))


def _richardson_trapezoid(v: GridFunction, k: Optional[int] = None) -> float:
    """
    Trapezoid rule on the grid and on every other node, combined as
    (4 T_h - T_2h) / 3 to cancel the h^2 term. ``k=None`` integrates v^2,
    otherwise alpha_v(k). Independent of the Simpson path, for cross-checks.
    """
    t, h, values = v.grid.nodes, v.grid.h, v.values

    def rule(x: np.ndarray, s: np.ndarray, step: float) -> float:
        if k is None:
            return float(trapezoid(x ** 2, dx=step))
        return _trapezoid_moment(x, s, step, k)

    fine = rule(values, t, h)
    coarse = rule(values[::2], t[::2], 2.0 * h)
    return (4.0 * fine - coarse) / 3.0


def quadrature_gap_bound(n: int) -> float:
    """
    Allowed gap between the Simpson and trapezoid coefficient triples, h^2.

    Directions with a kink between nodes keep an O(h^2) term in both rules,
    so the gap cannot fall below that order.
    """
    h = 1.0 / (n - 1)
    return QUADRATURE_GAP_CONSTANT * h * h


def kernel_coefficients(f: Nonlinearity, v: GridFunction) -> Tuple[float, float, float]:
    """(b2, b1, b0) of the quadratic radial potential of direction v."""
    if f.kind != NonlinearityKind.QUADRATIC:
        raise DomainError("closed-form kernel coefficients need a quadratic nonlinearity")
    b2 = f.a2 * alpha_moments(v, 2)
    b1 = integrate(GridFunction(v.grid, v.values ** 2)) - f.a1 * alpha_moments(v, 1)
    b0 = f.a0 * alpha_moments(v, 0)
    return b2, b1, b0


def closed_form_potential(coefficients: Tuple[float, float, float], t) -> np.ndarray:
    b2, b1, b0 = coefficients
    t = np.asarray(t, dtype=float)
    return -b2 * t ** 2 + b1 * t - b0


def closed_form_energy(coefficients: Tuple[float, float, float], t) -> np.ndarray:
    b2, b1, b0 = coefficients
    t = np.asarray(t, dtype=float)
    return -b2 * t ** 3 / 3.0 + b1 * t ** 2 / 2.0 - b0 * t


@dataclass
class CubicReport:
    """Critical-point structure of g(t) = -b2 t^3/3 + b1 t^2/2 - b0 t."""
    b2: float
    b1: float
    b0: float
    discriminant: float
    two_roots: bool
    t_minus: Optional[float] = None
    t_plus: Optional[float] = None
    g_minus: Optional[float] = None
    g_plus: Optional[float] = None
    t_plus_global_max: bool = False

    def to_dict(self) -> Dict:
        return {
            "b2": self.b2,
            "b1": self.b1,
            "b0": self.b0,
            "discriminant": self.discriminant,
            "two_roots": self.two_roots,
            "t_minus": self.t_minus,
            "t_plus": self.t_plus,
            "g_minus": self.g_minus,
            "g_plus": self.g_plus,
            "t_plus_global_max": self.t_plus_global_max,
        }


def cubic_analysis(b2: float, b1: float, b0: float) -> CubicReport:
    """
    Roots of g'(t) = -b2 t^2 + b1 t - b0 and the values of g there.

    The larger root comes from the quadratic formula without cancellation and
    the smaller one from the product of roots, t_- = b0 / (b2 t_+). At a root
    g(t) = t (b1 t - 4 b0) / 6.

    Raises:
        DomainError: If b2 <= 0
    """
    if not b2 > 0:
        raise DomainError(f"cubic analysis needs b2 > 0, got {b2}")
    discriminant = b1 * b1 - 4.0 * b2 * b0
    if not discriminant > 0:
        return CubicReport(b2=b2, b1=b1, b0=b0, discriminant=discriminant, two_roots=False)

    q = 0.5 * (b1 + math.copysign(math.sqrt(discriminant), b1))
    first, second = q / b2, b0 / q
    t_minus, t_plus = min(first, second), max(first, second)

    def g_at_root(t: float) -> float:
        return t * (b1 * t - 4.0 * b0) / 6.0

    g_minus, g_plus = g_at_root(t_minus), g_at_root(t_plus)
    return CubicReport(
        b2=b2, b1=b1, b0=b0,
        discriminant=discriminant,
        two_roots=True,
        t_minus=t_minus,
        t_plus=t_plus,
        g_minus=g_minus,
        g_plus=g_plus,
        t_plus_global_max=t_minus > 0 and g_plus > 0 and g_minus < 0,
    )


def _certify_direction(job: Tuple[ConeSpec, int, int, int, Nonlinearity]) -> Dict:
    cone, n, index, seed, f = job
    v = sample_direction(cone, make_uniform_grid(n), index, seed)
    b2, b1, b0 = kernel_coefficients(f, v)
    cubic = cubic_analysis(b2, b1, b0)
    l2_squared = integrate(GridFunction(v.grid, v.values ** 2))

    check_b2 = f.a2 * _richardson_trapezoid(v, 2)
    check_b1 = _richardson_trapezoid(v) - f.a1 * _richardson_trapezoid(v, 1)
    check_b0 = f.a0 * _richardson_trapezoid(v, 0)
    gap = max(abs(check_b2 - b2), abs(check_b1 - b1), abs(check_b0 - b0))

    slacks = []
    for value, (low, high) in zip((b2, b1, b0), COEFFICIENT_BOXES):
        slacks.append(min(value - low, high - value))
    return {
        "index": index,
        "coefficients": [b2, b1, b0],
        "box_slacks": slacks,
        "l2_squared": l2_squared,
        "cubic": cubic.to_dict(),
        "quadrature_gap": gap,
    }


@track_hypothesis_check("kernel-intervals")
def certify_kernel_intervals(
    direction_count: int = 50,
    seed: int = 0,
    n: int = 1025,
    nonlinearity: Optional[Nonlinearity] = None,
    workers: int = 1,
) -> HypothesisReport:
    """
    Interval certification of the kernel problem on sampled directions.

    For every direction the coefficient triple must lie in its certified box,
    the discriminant must exceed the floor and t_+ must lie in (10, 1e7).
    """
    f = nonlinearity or Nonlinearity.kernel_example()
    cone = ConeSpec(kind=ConeKind.KERNEL)
    jobs = [(cone, n, index, seed, f) for index in range(direction_count)]
    rows: List[Dict] = ordered_map(_certify_direction, jobs, workers)

    failures = []
    for row in rows:
        cubic = row["cubic"]
        reasons = []
        if min(row["box_slacks"]) < 0:
            reasons.append("coefficient outside certified box")
        if not cubic["discriminant"] > DISCRIMINANT_FLOOR:
            reasons.append("discriminant below floor")
        if not (cubic["two_roots"] and T_PLUS_RANGE[0] < cubic["t_plus"] < T_PLUS_RANGE[1]):
            reasons.append("t_plus outside range")
        if not cubic["t_plus_global_max"]:
            reasons.append("t_plus is not the global maximizer")
        if row["l2_squared"] < L2_SQUARED_FLOOR:
            reasons.append("L2 norm below floor")
        if reasons:
            failures.append({"index": row["index"], "reasons": reasons, "coefficients": row["coefficients"]})

    t_plus = [row["cubic"]["t_plus"] for row in rows if row["cubic"]["two_roots"]]
    witnesses = {
        "min_box_slack": [min(row["box_slacks"][i] for row in rows) for i in range(3)],
        "min_discriminant": min(row["cubic"]["discriminant"] for row in rows),
        "t_plus_range": [min(t_plus), max(t_plus)] if t_plus else None,
        "min_l2_squared": min(row["l2_squared"] for row in rows),
        "max_quadrature_gap": max(row["quadrature_gap"] for row in rows),
        "quadrature_gap_bound": quadrature_gap_bound(n),
        "coefficients": [row["coefficients"] for row in rows],
    }
    if failures:
        witnesses["failures"] = failures
        logger.warning("Interval certification failed", failures=len(failures))

    return HypothesisReport(
        condition="kernel-intervals",
        verdict=Verdict.FAIL if failures else Verdict.SAMPLED_PASS,
        witnesses=witnesses,
        sample_count=direction_count,
        seed=seed,
    )
