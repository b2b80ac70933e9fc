"""
Pydantic models for problem descriptions and their validation.
"""
import math
from enum import Enum
from typing import List, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy.interpolate import RegularGridInterpolator

from ..analysis.funcspace import Grid, Norm, make_uniform_grid

# (R = inf) is replaced by this radius for the kernel problem
KERNEL_DEFAULT_R_CAP = 1e8


class NonlinearityKind(str, Enum):
    """Supported forms of the nonlinearity f(x, y)."""
    POWER_RATIONAL = "power_rational"
    QUADRATIC = "quadratic"
    TABULATED = "tabulated"


class OperatorKind(str, Enum):
    """The two fixed-point problems the toolkit solves."""
    PLAPLACIAN = "plaplacian-bvp"
    KERNEL = "hammerstein-kernel"


class ConeKind(str, Enum):
    """Cones in which solutions are sought."""
    PLAPLACIAN = "plaplacian-cone"
    KERNEL = "kernel-cone"


class Mode(str, Enum):
    """Whether t_v is the maximizer or the minimizer of the radial energy."""
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


class Nonlinearity(BaseModel):
    """
    Nonlinearity f(x, y) of the fixed-point problem.

    power_rational: P(x) * (alpha + beta / (1 + |y|)) with P given by ascending
    coefficients, so f_0 = (alpha + beta) P and f_inf = alpha P.
    quadratic: a2 x^2 + a1 x + a0, independent of y.
    tabulated: bilinear interpolation of ``table`` on ``x_nodes`` x ``y_nodes``,
    clamped to the table box. When every y node is non-negative the table is
    read at |y|. f_inf is approximated by f(x, y_big).
    """
    model_config = ConfigDict(extra="forbid")

    kind: NonlinearityKind = Field(..., description="Form of the nonlinearity")
    coefficients: List[float] = Field(
        default_factory=lambda: [0.0, 0.0, 1.0],
        description="Ascending coefficients of P(x) (power_rational)",
        min_length=1,
    )
    alpha: float = Field(1.0, description="Limit weight as |y| grows (power_rational)")
    beta: float = Field(1.0, description="Extra weight at y = 0 (power_rational)")
    a2: float = Field(0.0, description="Quadratic coefficient (quadratic)")
    a1: float = Field(0.0, description="Linear coefficient (quadratic)")
    a0: float = Field(0.0, description="Constant coefficient (quadratic)")
    x_nodes: Optional[List[float]] = Field(None, description="Increasing x nodes (tabulated)")
    y_nodes: Optional[List[float]] = Field(None, description="Increasing y nodes (tabulated)")
    table: Optional[List[List[float]]] = Field(None, description="Values f(x_i, y_j) (tabulated)")
    y_big: float = Field(1e12, gt=0, description="Stand-in for y -> infinity (tabulated)")

    _interpolator: Optional[RegularGridInterpolator] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def validate_table(self) -> "Nonlinearity":
        """Tabulated nonlinearities need a consistent, strictly increasing table."""
        if self.kind != NonlinearityKind.TABULATED:
            return self
        if self.x_nodes is None or self.y_nodes is None or self.table is None:
            raise ValueError("tabulated nonlinearity requires x_nodes, y_nodes and table")
        xs = np.asarray(self.x_nodes, dtype=float)
        ys = np.asarray(self.y_nodes, dtype=float)
        values = np.asarray(self.table, dtype=float)
        if xs.size < 2 or ys.size < 2:
            raise ValueError("tabulated nonlinearity needs at least two nodes per axis")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("table nodes must be strictly increasing")
        if values.shape != (xs.size, ys.size):
            raise ValueError(
                f"table shape {values.shape} does not match nodes ({xs.size}, {ys.size})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("table values must be finite")
        self._interpolator = RegularGridInterpolator((xs, ys), values, method="linear")
        return self

    @classmethod
    def kernel_example(cls) -> "Nonlinearity":
        """f(x) = 1e-2 x^2 + 2.5e-3 x + 1."""
        return cls(kind=NonlinearityKind.QUADRATIC, a2=1e-2, a1=2.5e-3, a0=1.0)

    @classmethod
    def plaplacian_example(cls) -> "Nonlinearity":
        """f(x, y) = x^2 (1 + 1 / (1 + |y|))."""
        return cls(kind=NonlinearityKind.POWER_RATIONAL, coefficients=[0.0, 0.0, 1.0], alpha=1.0, beta=1.0)

    @classmethod
    def polynomial(cls, coefficients: List[float]) -> "Nonlinearity":
        """f(x, y) = P(x), independent of y."""
        return cls(kind=NonlinearityKind.POWER_RATIONAL, coefficients=list(coefficients), alpha=1.0, beta=0.0)

    @classmethod
    def tabulate(cls, fn, x_nodes, y_nodes, y_big: float = 1e12) -> "Nonlinearity":
        """Tabulate a callable f(x, y) on the given node vectors."""
        X, Y = np.meshgrid(np.asarray(x_nodes, float), np.asarray(y_nodes, float), indexing="ij")
        table = np.asarray(fn(X, Y), dtype=float)
        return cls(
            kind=NonlinearityKind.TABULATED,
            x_nodes=[float(x) for x in x_nodes],
            y_nodes=[float(y) for y in y_nodes],
            table=table.tolist(),
            y_big=y_big,
        )

    def _tabulated(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        xs, ys = self._interpolator.grid
        if ys[0] >= 0:
            y = np.abs(y)
        x = np.clip(x, xs[0], xs[-1])
        y = np.clip(y, ys[0], ys[-1])
        x, y = np.broadcast_arrays(x, y)
        points = np.stack([x.ravel(), y.ravel()], axis=-1)
        return self._interpolator(points).reshape(x.shape)

    def evaluate(self, x, y):
        """Pointwise f(x, y); accepts scalars or arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == NonlinearityKind.QUADRATIC:
            out = (self.a2 * x + self.a1) * x + self.a0 + 0.0 * y
        elif self.kind == NonlinearityKind.POWER_RATIONAL:
            out = npoly.polyval(x, self.coefficients) * (self.alpha + self.beta / (1.0 + np.abs(y)))
        else:
            out = self._tabulated(x, y)
        return float(out) if np.ndim(out) == 0 else out

    def f0(self, x):
        """f(x, 0)."""
        return self.evaluate(x, 0.0)

    def f_inf(self, x):
        """Limit of f(x, y) as y grows without bound."""
        if self.kind == NonlinearityKind.QUADRATIC:
            return self.evaluate(x, 0.0)
        if self.kind == NonlinearityKind.POWER_RATIONAL:
            out = npoly.polyval(np.asarray(x, dtype=float), self.coefficients) * self.alpha
            return float(out) if np.ndim(out) == 0 else out
        return self.evaluate(x, self.y_big)

    def __eq__(self, other: object) -> bool:
        # The interpolator is derived from the table, so compare fields only
        if not isinstance(other, Nonlinearity):
            return NotImplemented
        return self.model_dump() == other.model_dump()


class Tolerances(BaseModel):
    """Numerical tolerances of one run."""
    model_config = ConfigDict(extra="forbid")

    residual: float = Field(1e-8, gt=0, description="Fixed-point residual accepted as converged")
    tv: float = Field(1e-8, gt=0, description="Relative bracket width for the t_v search")
    census: float = Field(1e-9, gt=0, description="Critical-point and energy tie tolerance")
    symmetry: float = Field(1e-8, ge=0, description="Relative symmetry tolerance of p-Laplacian data")
    membership: float = Field(1e-9, ge=0, description="Relative cone-membership tolerance")
    direction: float = Field(1e-14, gt=0, description="Direction change that stops the Nehari iteration")
    h2_threshold: float = Field(1e-6, ge=0, description="Smallest |T(u)| accepted as positive in (h2)")


class ConeSpec(BaseModel):
    """One of the two cones, with the norm used for unit directions."""
    model_config = ConfigDict(extra="forbid")

    kind: ConeKind = Field(..., description="Which cone")
    p: float = Field(2.0, gt=1, description="Exponent of the W^{1,p} norm (plaplacian-cone)")
    tolerance: float = Field(1e-9, ge=0, description="Relative membership tolerance")

    @property
    def norm(self) -> Norm:
        if self.kind == ConeKind.PLAPLACIAN:
            return Norm.w1p(self.p)
        return Norm.sup()


class ProblemSpec(BaseModel):
    """Full description of one fixed-point problem."""
    model_config = ConfigDict(extra="forbid")

    operator: OperatorKind = Field(..., description="Which fixed-point operator T")
    nonlinearity: Nonlinearity = Field(..., description="Nonlinearity f")
    p: float = Field(2.0, gt=1, description="p-Laplacian exponent")
    r: float = Field(0.0, ge=0, description="Inner radius of the annulus")
    R: float = Field(math.inf, gt=0, description="Outer radius of the annulus (may be infinite)")
    R_cap: Optional[float] = Field(None, gt=0, description="Finite stand-in for an infinite outer radius")
    beta: float = Field(0.25, gt=0, lt=0.5, description="Harnack cut point in (0, 1/2)")
    n: int = Field(1025, description="Grid node count (odd)")
    mode: Mode = Field(Mode.MAXIMIZE, description="Maximize or minimize the radial energy")
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("n")
    @classmethod
    def validate_grid_size(cls, v: int) -> int:
        """Composite Simpson needs an odd node count of at least 3."""
        if v < 3 or v % 2 == 0:
            raise ValueError(f"grid size must be odd and at least 3, got {v}")
        return v

    @model_validator(mode="after")
    def validate_annulus(self) -> "ProblemSpec":
        """The annulus must be non-empty and searchable."""
        if not self.r < self.R:
            raise ValueError(f"annulus requires r < R, got r={self.r}, R={self.R}")
        if math.isinf(self.R):
            if self.R_cap is None and self.operator == OperatorKind.PLAPLACIAN:
                raise ValueError("annulus with R = inf requires R_cap for the p-Laplacian problem")
            cap = self.R_cap if self.R_cap is not None else KERNEL_DEFAULT_R_CAP
            if not cap > self.r:
                raise ValueError(f"annulus cap R_cap={cap} must exceed r={self.r}")
        return self

    @property
    def grid(self) -> Grid:
        return make_uniform_grid(self.n)

    def effective_R(self) -> float:
        """Outer radius used by searches: R itself, or the cap when R is infinite."""
        if math.isfinite(self.R):
            return self.R
        return self.R_cap if self.R_cap is not None else KERNEL_DEFAULT_R_CAP

    def cone_spec(self) -> ConeSpec:
        if self.operator == OperatorKind.PLAPLACIAN:
            return ConeSpec(kind=ConeKind.PLAPLACIAN, p=self.p, tolerance=self.tolerances.membership)
        return ConeSpec(kind=ConeKind.KERNEL, tolerance=self.tolerances.membership)

    def with_updates(self, **changes) -> "ProblemSpec":
        """Validated copy with some fields replaced."""
        data = self.model_dump()
        data.update(changes)
        return ProblemSpec.model_validate(data)
