"""
Uniform-grid representation of real functions on [0, 1].

Provides the grid, immutable grid functions, composite Simpson quadrature,
second-order differentiation and the norms used throughout the toolkit.
"""
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import simpson

from ..errors import InvalidExponentError, InvalidGridError

Number = Union[int, float]


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1] with an odd number of nodes."""
    n: int

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def midpoint_index(self) -> int:
        return (self.n - 1) // 2

    @cached_property
    def nodes(self) -> np.ndarray:
        return _frozen_array(np.linspace(0.0, 1.0, self.n))

    @cached_property
    def distance_to_boundary(self) -> np.ndarray:
        """min(t, 1 - t), built so that it is exactly symmetric node by node."""
        t = self.nodes
        return _frozen_array(np.minimum(t, t[::-1]))


@lru_cache(maxsize=None)
def make_uniform_grid(n: int) -> Grid:
    """
    Build the uniform grid with ``n`` nodes.

    Args:
        n: Node count, odd and at least 3

    Returns:
        Grid with spacing 1/(n-1)

    Raises:
        InvalidGridError: If n is even, too small or not an integer
    """
    if isinstance(n, bool) or int(n) != n:
        raise InvalidGridError(f"grid size must be an integer, got {n!r}")
    n = int(n)
    if n < 3:
        raise InvalidGridError(f"grid size must be at least 3, got {n}")
    if n % 2 == 0:
        raise InvalidGridError(f"grid size must be odd for composite Simpson, got {n}")
    return Grid(n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Values of a real function at the nodes of a grid.

    Instances are immutable. Arithmetic returns new functions and carries
    stored derivative values along when every operand has them.
    """
    grid: Grid
    values: np.ndarray
    deriv: Optional[np.ndarray] = None

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != (self.grid.n,):
            raise InvalidGridError(
                f"expected {self.grid.n} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", values)

        if self.deriv is not None:
            deriv = _frozen_array(self.deriv)
            if deriv.shape != (self.grid.n,):
                raise InvalidGridError(
                    f"expected {self.grid.n} derivative values, got shape {deriv.shape}"
                )
            if not np.all(np.isfinite(deriv)):
                raise ValueError("grid function derivative values must be finite")
            object.__setattr__(self, "deriv", deriv)

    @classmethod
    def from_callable(
        cls,
        grid: Grid,
        fn: Callable[[np.ndarray], np.ndarray],
        deriv_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> "GridFunction":
        t = grid.nodes
        values = np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape)
        deriv = None
        if deriv_fn is not None:
            deriv = np.broadcast_to(np.asarray(deriv_fn(t), dtype=float), t.shape)
        return cls(grid, values, deriv)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n), np.zeros(grid.n))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def _check_grid(self, other: "GridFunction") -> None:
        if other.grid != self.grid:
            raise InvalidGridError(
                f"grid mismatch: {self.grid.n} nodes vs {other.grid.n} nodes"
            )

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_grid(other)
        deriv = None
        if self.deriv is not None and other.deriv is not None:
            deriv = self.deriv + other.deriv
        return GridFunction(self.grid, self.values + other.values, deriv)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_grid(other)
        deriv = None
        if self.deriv is not None and other.deriv is not None:
            deriv = self.deriv - other.deriv
        return GridFunction(self.grid, self.values - other.values, deriv)

    def __mul__(self, scalar: Number) -> "GridFunction":
        scalar = float(scalar)
        deriv = None if self.deriv is None else scalar * self.deriv
        return GridFunction(self.grid, scalar * self.values, deriv)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number) -> "GridFunction":
        scalar = float(scalar)
        deriv = None if self.deriv is None else self.deriv / scalar
        return GridFunction(self.grid, self.values / scalar, deriv)

    def __neg__(self) -> "GridFunction":
        return self * -1.0


def integrate_values(values: np.ndarray, grid: Grid) -> float:
    """Composite Simpson integral over [0, 1] of raw node values."""
    return float(simpson(values, dx=grid.h))


def integrate(f: GridFunction) -> float:
    """
    Composite Simpson approximation of the integral of f over [0, 1].

    Exact for polynomials of degree at most 3.
    """
    return integrate_values(f.values, f.grid)


def derivative(f: GridFunction) -> GridFunction:
    """
    Derivative of f at the grid nodes.

    Stored analytic derivative values are returned as they are. Otherwise
    central differences are used in the interior and second-order one-sided
    stencils at both ends.
    """
    if f.deriv is not None:
        return GridFunction(f.grid, f.deriv)
    return GridFunction(f.grid, np.gradient(f.values, f.grid.h, edge_order=2))


class NormKind(str, Enum):
    """Norms available on grid functions."""
    SUP = "sup"
    LP = "lp"
    W1P = "w1p"
    L2 = "l2"


@dataclass(frozen=True)
class Norm:
    """A norm kind together with its exponent where one applies."""
    kind: NormKind
    p: float = 2.0

    def __post_init__(self):
        if self.kind in (NormKind.LP, NormKind.W1P) and not self.p > 1:
            raise InvalidExponentError(f"norm exponent must exceed 1, got p={self.p}")

    @classmethod
    def sup(cls) -> "Norm":
        return cls(NormKind.SUP)

    @classmethod
    def lp(cls, p: float) -> "Norm":
        return cls(NormKind.LP, float(p))

    @classmethod
    def w1p(cls, p: float) -> "Norm":
        return cls(NormKind.W1P, float(p))

    @classmethod
    def l2(cls) -> "Norm":
        return cls(NormKind.L2, 2.0)

    def label(self) -> str:
        if self.kind in (NormKind.LP, NormKind.W1P):
            return f"{self.kind.value}({self.p:g})"
        return self.kind.value


def _lp(values: np.ndarray, grid: Grid, p: float) -> float:
    # Simpson weights are positive, so the integral of |f|^p is never negative
    return integrate_values(np.abs(values) ** p, grid) ** (1.0 / p)


def norm(f: GridFunction, kind: Norm) -> float:
    """
    Evaluate a norm of f.

    Args:
        f: Grid function
        kind: Which norm; W1p uses the stored derivative when present

    Returns:
        Non-negative norm value

    Raises:
        InvalidExponentError: If the exponent is not greater than 1
    """
    if kind.kind in (NormKind.LP, NormKind.W1P) and not kind.p > 1:
        raise InvalidExponentError(f"norm exponent must exceed 1, got p={kind.p}")

    if kind.kind == NormKind.SUP:
        return float(np.max(np.abs(f.values)))
    if kind.kind == NormKind.L2:
        return _lp(f.values, f.grid, 2.0)
    if kind.kind == NormKind.LP:
        return _lp(f.values, f.grid, kind.p)
    return _lp(derivative(f).values, f.grid, kind.p)
