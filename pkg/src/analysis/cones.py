"""
Cone membership checks and seeded sampling of unit cone directions.
"""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from ..errors import SamplerError, ZeroDirectionError
from ..logging_config import get_logger
from ..models.schemas import ConeKind, ConeSpec
from .funcspace import Grid, GridFunction, norm
from .operators import green_integral, phi_weight, plaplace_inverse

logger = get_logger(__name__, component="cones")

# Nodes are compared against 1/4 and 3/4 with this slack
_QUARTER_SLACK = 1e-12


@dataclass
class MembershipReport:
    """
    Outcome of a membership check.

    Margins are divided by the sup norm of the tested function (or left as
    they are for the zero function); a predicate holds when its margin is at
    least ``-tolerance``.
    """
    kind: ConeKind
    tolerance: float
    margins: Dict[str, float] = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(margin >= -self.tolerance for margin in self.margins.values())

    @property
    def failed(self) -> List[str]:
        return sorted(name for name, margin in self.margins.items() if margin < -self.tolerance)

    @property
    def symmetry_defect(self) -> float:
        return -self.margins.get("symmetry", 0.0)

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind.value,
            "overall": self.overall,
            "tolerance": self.tolerance,
            "margins": dict(sorted(self.margins.items())),
        }


def quarter_mask(grid: Grid) -> np.ndarray:
    t = grid.nodes
    return (t >= 0.25 - _QUARTER_SLACK) & (t <= 0.75 + _QUARTER_SLACK)


def check_membership(u: GridFunction, cone: ConeSpec) -> MembershipReport:
    """
    Evaluate every defining predicate of the cone on u; never raises.

    plaplacian-cone: u >= 0, u(t) = u(1 - t), discrete concavity and the
    Harnack bound u(t) >= phi(t) |u|_{1,p} on [0, 1/2].
    kernel-cone: u >= 0 and min over [1/4, 3/4] >= |u|_sup / 4.
    """
    values = u.values
    sup = float(np.max(np.abs(values)))
    scale = sup if sup > 0 else 1.0
    margins = {"nonnegativity": float(np.min(values)) / scale}

    if cone.kind == ConeKind.PLAPLACIAN:
        margins["symmetry"] = -float(np.max(np.abs(values - values[::-1]))) / scale
        second = values[:-2] - 2.0 * values[1:-1] + values[2:]
        margins["concavity"] = -float(np.max(second, initial=0.0)) / scale

        m = u.grid.midpoint_index
        weight = phi_weight(u.grid.distance_to_boundary[: m + 1], cone.p)
        harnack = values[: m + 1] - weight * norm(u, cone.norm)
        margins["harnack"] = float(np.min(harnack)) / scale
    else:
        inner = values[quarter_mask(u.grid)]
        margins["quarter_min"] = (float(np.min(inner)) - 0.25 * sup) / scale

    return MembershipReport(kind=cone.kind, tolerance=cone.tolerance, margins=margins)


def normalize(u: GridFunction, cone: ConeSpec) -> GridFunction:
    """
    Scale u to unit norm in the cone's norm.

    Raises:
        ZeroDirectionError: If u has zero norm
    """
    size = norm(u, cone.norm)
    if not size > 0:
        raise ZeroDirectionError("cannot normalize a function of zero norm")
    return u / size


def direction_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for sample ``index``, independent of every other index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _plaplacian_candidate(grid: Grid, p: float, index: int, seed: int) -> GridFunction:
    # Symmetric, nonnegative and nondecreasing on (0, 1/2)
    twice_m = 2.0 * grid.distance_to_boundary
    if index == 0:
        h = np.ones(grid.n)
    else:
        rng = direction_rng(seed, index)
        terms = int(rng.integers(1, 4))
        h = np.full(grid.n, rng.uniform(0.0, 1.0))
        for weight, power in zip(rng.uniform(0.05, 1.0, terms), rng.uniform(0.5, 4.0, terms)):
            h = h + weight * twice_m ** power
    return plaplace_inverse(GridFunction(grid, h), p)


def _kernel_candidate(grid: Grid, index: int, seed: int) -> GridFunction:
    t = grid.nodes
    if index == 0:
        return GridFunction(grid, 2.0 * grid.distance_to_boundary)
    if index == 1:
        return GridFunction(grid, 4.0 * t * (1.0 - t))

    rng = direction_rng(seed, index)
    if index % 2 == 1:
        peak = rng.uniform(0.25, 0.75)
        return GridFunction(grid, np.minimum(t / peak, (1.0 - t) / (1.0 - peak)))

    # Green image of a nonnegative cosine sum: concave, vanishing at both ends
    terms = int(rng.integers(1, 5))
    w = np.full(grid.n, rng.uniform(0.0, 1.0))
    for _ in range(terms):
        w = w + rng.uniform(0.0, 1.0) * (
            1.0 + np.cos(2.0 * np.pi * rng.integers(1, 6) * t + rng.uniform(0.0, 2.0 * np.pi))
        )
    return GridFunction(grid, green_integral(w, grid))


def sample_direction(cone: ConeSpec, grid: Grid, index: int, seed: int) -> GridFunction:
    """
    The ``index``-th unit direction of the cone for ``seed``.

    Raises:
        SamplerError: If the generated direction fails the membership check
    """
    if cone.kind == ConeKind.PLAPLACIAN:
        candidate = _plaplacian_candidate(grid, cone.p, index, seed)
    else:
        candidate = _kernel_candidate(grid, index, seed)

    direction = normalize(candidate, cone)
    report = check_membership(direction, cone)
    if not report.overall:
        raise SamplerError(
            f"sampled direction {index} (seed {seed}) left the {cone.kind.value}: "
            f"failed {', '.join(report.failed)}"
        )
    return direction


def sample_directions(cone: ConeSpec, count: int, seed: int, grid: Grid) -> List[GridFunction]:
    """
    Deterministic list of ``count`` unit-norm cone members.

    Directions are normalized images of cone-invariant base maps: the
    p-Laplacian inverse of symmetric data nondecreasing on (0, 1/2), or for
    the kernel cone the tent and parabola family plus Green images of
    nonnegative data.
    """
    if count < 1:
        raise ValueError(f"direction count must be at least 1, got {count}")
    directions = [sample_direction(cone, grid, index, seed) for index in range(count)]
    logger.debug("Sampled cone directions", cone=cone.kind.value, count=count, seed=seed)
    return directions
