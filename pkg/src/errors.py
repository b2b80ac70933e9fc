"""
Exception hierarchy for the Nehari fixed-point toolkit.
"""
from typing import Optional


class NehariError(Exception):
    """Base class for all errors raised by the toolkit."""
    pass


class InvalidGridError(NehariError, ValueError):
    """Grid node count is even or smaller than three."""
    pass


class InvalidExponentError(NehariError, ValueError):
    """Exponent outside its admissible range (p <= 1, alpha <= 0)."""
    pass


class DomainError(NehariError, ValueError):
    """Argument outside the domain of a function."""
    pass


class AsymmetricInputError(NehariError, ValueError):
    """Right-hand side of the p-Laplacian is not symmetric about 1/2."""

    def __init__(self, defect: float, tolerance: float):
        self.defect = defect
        self.tolerance = tolerance
        super().__init__(
            f"input is not symmetric about 1/2: defect {defect:.3e} exceeds tolerance {tolerance:.3e}"
        )


class ZeroDirectionError(NehariError, ValueError):
    """Attempt to normalize a function of zero norm."""
    pass


class SamplerError(NehariError, RuntimeError):
    """A generated cone direction failed the membership check."""
    pass


class TvSearchError(NehariError):
    """Base class for failures of the per-direction maximizer search."""
    pass


class BoundaryMaximumError(TvSearchError):
    """The radial energy attains its maximum at an endpoint of the annulus."""

    def __init__(self, t: float, r: float, R: float):
        self.t = t
        self.r = r
        self.R = R
        side = "inner" if t <= r else "outer"
        super().__init__(
            f"boundary maximum: radial energy is maximal at the {side} radius t={t:.6g} of [{r:.6g}, {R:.6g}]"
        )


class AmbiguousMaximumError(TvSearchError):
    """Two separated samples share the maximal radial energy."""

    def __init__(self, t_first: float, t_second: float, energy: float):
        self.t_first = t_first
        self.t_second = t_second
        self.energy = energy
        super().__init__(
            f"ambiguous maximum: t={t_first:.6g} and t={t_second:.6g} both reach energy {energy:.6g}"
        )


class EstimationError(NehariError, RuntimeError):
    """An iterative estimate failed to converge from every start."""
    pass


class ConfigError(NehariError, ValueError):
    """Invalid run configuration; carries the dotted key path at fault."""

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        prefix = f"{key_path}: " if key_path else ""
        super().__init__(f"{prefix}{message}")
