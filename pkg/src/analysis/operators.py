"""
Concrete operators of the two fixed-point problems.

The Harnack weight phi, the signed power, the inverse of the one-dimensional
p-Laplacian with Dirichlet conditions, the Nemytskii operator, the Green-kernel
Hammerstein operator, the dispatching operator T and the functional F.
"""
import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from ..errors import AsymmetricInputError, DomainError, InvalidExponentError
from ..models.schemas import Nonlinearity, OperatorKind, ProblemSpec
from .funcspace import Grid, GridFunction, derivative, integrate_values

# Below this relative jump of mu across a cell the exact segment formula
# loses more to cancellation than the midpoint rule loses to curvature.
_SEGMENT_CANCELLATION = 1e-6


def _check_p(p: float) -> None:
    if not p > 1:
        raise InvalidExponentError(f"exponent p must exceed 1, got p={p}")


def _cumulative(values: np.ndarray, dx: float) -> np.ndarray:
    if values.size >= 3:
        return cumulative_simpson(values, dx=dx, initial=0.0)
    return cumulative_trapezoid(values, dx=dx, initial=0.0)


def green_kernel(t, s):
    """k(t, s) = min(t, s) (1 - max(t, s)), the Green function of -u'' on (0, 1)."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    return np.minimum(t, s) * (1.0 - np.maximum(t, s))


def phi_weight(t, p: float):
    """
    Harnack weight phi(t) = integral over [0, t] of (1 - 2s)^(1/(p-1)).

    Evaluated through the closed form ((p-1)/(2p)) (1 - (1-2t)^(p/(p-1))).

    Raises:
        DomainError: If any t lies outside [0, 1/2]
        InvalidExponentError: If p <= 1
    """
    _check_p(p)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 0.5):
        raise DomainError(f"phi_weight is defined on [0, 1/2], got t in [{t.min()}, {t.max()}]")
    out = (p - 1.0) / (2.0 * p) * (1.0 - (1.0 - 2.0 * t) ** (p / (p - 1.0)))
    return float(out) if out.ndim == 0 else out


def signed_power(x, alpha: float):
    """sgn(x) |x|^alpha; alpha = p - 1 gives the duality map, 1/(p - 1) its inverse."""
    if not alpha > 0:
        raise InvalidExponentError(f"signed_power exponent must be positive, got {alpha}")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.abs(x) ** alpha
    return float(out) if out.ndim == 0 else out


def _segment_integrals(mu: np.ndarray, alpha: float, dx: float) -> np.ndarray:
    """Integral of signed_power(mu, alpha) over each cell with mu linear in between."""
    mu0, mu1 = mu[:-1], mu[1:]
    jump = mu1 - mu0
    exact = np.abs(jump) > _SEGMENT_CANCELLATION * np.maximum(np.abs(mu0), np.abs(mu1))
    safe_jump = np.where(exact, jump, 1.0)
    primitive1 = np.abs(mu1) ** (alpha + 1.0) / (alpha + 1.0)
    primitive0 = np.abs(mu0) ** (alpha + 1.0) / (alpha + 1.0)
    by_primitive = dx * (primitive1 - primitive0) / safe_jump
    by_midpoint = dx * signed_power(0.5 * (mu0 + mu1), alpha)
    return np.where(exact, by_primitive, by_midpoint)


def plaplace_inverse(h: GridFunction, p: float, sym_tol: float = 1e-8) -> GridFunction:
    """
    Solve -(|u'|^{p-2} u')' = h on (0, 1) with u(0) = u(1) = 0.

    Uses u(t) = integral over [0, t] of phi^{-1}(mu), mu(t) = integral over
    [t, 1/2] of h, which holds for h symmetric about 1/2. mu is accumulated by
    cumulative Simpson from the midpoint outward and the left half is mirrored,
    so the output is exactly symmetric. The analytic derivative phi^{-1}(mu) is
    stored on the result.

    Args:
        h: Right-hand side, symmetric about 1/2
        p: Exponent, p > 1
        sym_tol: Allowed max |h(t) - h(1-t)| relative to the sup norm of h

    Returns:
        The solution u with stored derivative values

    Raises:
        AsymmetricInputError: If h is not symmetric within tolerance
    """
    _check_p(p)
    grid = h.grid
    values = h.values
    allowed = sym_tol * float(np.max(np.abs(values)))
    defect = float(np.max(np.abs(values - values[::-1])))
    if defect > allowed:
        raise AsymmetricInputError(defect, allowed)

    m = grid.midpoint_index
    alpha = 1.0 / (p - 1.0)
    mu_left = _cumulative(values[m::-1], grid.h)[::-1]
    du_left = signed_power(mu_left, alpha)
    u_left = np.concatenate(([0.0], np.cumsum(_segment_integrals(mu_left, alpha, grid.h))))

    u = np.concatenate((u_left, u_left[-2::-1]))
    du = np.concatenate((du_left, -du_left[-2::-1]))
    return GridFunction(grid, u, du)


def plaplacian(u: GridFunction, p: float) -> GridFunction:
    """Discrete p-Laplacian -(signed_power(u', p - 1))'."""
    _check_p(p)
    flux = GridFunction(u.grid, signed_power(derivative(u).values, p - 1.0))
    return -derivative(flux)


def nemytskii(f: Nonlinearity, u: GridFunction, du: GridFunction) -> GridFunction:
    """Pointwise substitution t -> f(u(t), u'(t))."""
    u._check_grid(du)
    return GridFunction(u.grid, f.evaluate(u.values, du.values))


def green_integral(g: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Integral over s of k(t, s) g(s) at every node t.

    Each row is split at the diagonal s = t, where the kernel has its kink:
    (1 - t) * int_0^t s g(s) ds + t * int_t^1 (1 - s) g(s) ds.
    """
    t = grid.nodes
    lower = _cumulative(t * g, grid.h)
    upper = _cumulative((1.0 - t) * g, grid.h)
    return (1.0 - t) * lower + t * (upper[-1] - upper)


def hammerstein(f: Nonlinearity, u: GridFunction) -> GridFunction:
    """T(u)(t) = integral over [0, 1] of k(t, s) f(u(s)) ds; vanishes at both ends."""
    return GridFunction(u.grid, green_integral(f.f0(u.values), u.grid))


def apply_T(prob: ProblemSpec, u: GridFunction) -> GridFunction:
    """
    Apply the problem's fixed-point operator.

    p-Laplacian: J^{-1} N_f(u, u'); kernel: the Hammerstein operator.
    """
    if prob.operator == OperatorKind.PLAPLACIAN:
        g = nemytskii(prob.nonlinearity, u, derivative(u))
        return plaplace_inverse(g, prob.p, prob.tolerances.symmetry)
    return hammerstein(prob.nonlinearity, u)


def duality_pairing(u: GridFunction, w: GridFunction, p: float) -> float:
    """<Ju, w> = integral of |u'|^{p-2} u' w'."""
    _check_p(p)
    return integrate_values(
        signed_power(derivative(u).values, p - 1.0) * derivative(w).values, u.grid
    )


def F_eval(prob: ProblemSpec, u: GridFunction, v: GridFunction, w: GridFunction) -> float:
    """
    The functional F(u, v, w).

    p-Laplacian: <Jv - Ju, w>; kernel: integral of (v - u) w. Both differences
    are formed under a single integral.
    """
    u._check_grid(v)
    u._check_grid(w)
    if prob.operator == OperatorKind.PLAPLACIAN:
        flux = (
            signed_power(derivative(v).values, prob.p - 1.0)
            - signed_power(derivative(u).values, prob.p - 1.0)
        )
        return integrate_values(flux * derivative(w).values, u.grid)
    return integrate_values((v.values - u.values) * w.values, u.grid)
