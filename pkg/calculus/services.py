import logging
import math
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from gauge.models import ConnectionField, IntegratorOptions
from gauge.services import holonomy
from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import Stencil
from loopcalc.sysutils.exceptions import (
    DependentDirections,
    IndexOutOfRange,
    LoopCalcError,
    RadiusExceeded,
)
from paths.models import Path, Point, as_point
from paths.services import (
    collinear,
    compose,
    compose_all,
    direction,
    endpoint,
    inverse,
    parallelogram,
    segment,
)

from .models import DerivativeResult, FDScheme, PathFunctional, Section

logger = logging.getLogger(__name__)

Probe = Callable[[Point, Point, float], Path]

# bracket for the fitted convergence order
ORDER_SEARCH = (0.05, 12.0)


# -----------------------------
# FUNCTIONALS AND SECTIONS
# -----------------------------
def holonomy_functional(A: ConnectionField, opts: IntegratorOptions | None = None) -> PathFunctional:
    return PathFunctional(partial(holonomy, A, opts=opts), (A.size, A.size), name="W")


def endpoint_coordinate(nu: int, dim: int) -> PathFunctional:
    if not 1 <= nu <= dim:
        raise IndexOutOfRange(f"Coordinate index {nu} is outside 1..{dim}.")
    return PathFunctional(lambda p: [[endpoint(p)[nu - 1]]], (1, 1), name=f"x{nu}")


def constant_functional(value) -> PathFunctional:
    matrix = np.atleast_2d(np.asarray(value, dtype=complex))
    return PathFunctional(lambda p: matrix, matrix.shape, name="const")


def unit(dim: int, mu: int) -> Point:
    if not 1 <= mu <= dim:
        raise IndexOutOfRange(f"Direction index {mu} is outside 1..{dim}.")
    return tuple(1.0 if k == mu - 1 else 0.0 for k in range(dim))


def _shift(x: Point, v: Sequence[float], eps: float) -> Point:
    return tuple(a + eps * b for a, b in zip(x, v))


def transport_section(pi: Path) -> Section:
    """Phi(y) = pi . segment(x, y): the horizontal section through pi."""
    x = endpoint(pi)
    return Section(center=x, evaluate=lambda y: compose(pi, segment(x, y)), radius=math.inf, name="transport")


def arc_section(base: Sequence[float], waypoint: Sequence[float], center: Sequence[float],
                pieces: int = 8, radius: float | None = None) -> Section:
    """Curved section: straight leg base -> waypoint, then a quarter arc to y.

    The arc is w + (1 - cos(pi t/2)) a + sin(pi t/2) b with a the first-axis
    part of y - w and b the rest, sampled at ``pieces`` points. Every vertex is
    affine in y, so functionals of the section are smooth in y.
    """
    o = as_point(base)
    w = as_point(waypoint, len(o))
    x = as_point(center, len(o))
    gap = math.dist(w, x)
    if gap == 0.0:
        raise LoopCalcError("The arc waypoint must differ from the section center.")
    if pieces < 1:
        raise LoopCalcError("pieces must be at least 1.")
    lead = () if o == w else (w,)

    def evaluate(y: Point) -> Path:
        d = np.subtract(y, w)
        a = np.zeros_like(d)
        a[0] = d[0]
        b = d - a
        arc = [
            tuple(np.asarray(w) + (1.0 - math.cos(0.5 * math.pi * t)) * a + math.sin(0.5 * math.pi * t) * b)
            for t in (k / pieces for k in range(1, pieces))
        ]
        return Path(o, (*lead, *arc, y))

    return Section(center=x, evaluate=evaluate, radius=0.5 * gap if radius is None else radius, name="arc")


# -----------------------------
# FINITE DIFFERENCES
# -----------------------------
def richardson_table(values: Sequence[np.ndarray], eps_list: Sequence[float], p: int) -> list[list[np.ndarray]]:
    """Neville tableau extrapolating to eps = 0 in powers of eps**p.

    ``rows[k][j]`` combines levels k-j..k; ``rows[-1][-1]`` is the best value.
    """
    rows: list[list[np.ndarray]] = []
    for k, value in enumerate(values):
        row = [np.asarray(value)]
        for j in range(1, k + 1):
            factor = (eps_list[k - j] / eps_list[k]) ** p
            row.append(row[j - 1] + (row[j - 1] - rows[k - 1][j - 1]) / (factor - 1.0))
        rows.append(row)
    return rows


def _spacing_ratio(p: float, e1: float, e2: float, e3: float) -> float:
    # (e1^p - e2^p) / (e2^p - e3^p): successive differences of an O(eps^p) error
    return math.log((e1 ** p - e2 ** p) / (e2 ** p - e3 ** p))


def observed_order(raw: Sequence[np.ndarray], eps_list: Sequence[float], floor: float) -> float:
    """Order p fitted to the last three levels; nan when the differences sit at roundoff.

    Solves (e1^p - e2^p) / (e2^p - e3^p) = d1 / d2, which holds for any
    decreasing step sizes, geometric or not.
    """
    if len(raw) < 3:
        return math.nan
    d1 = float(np.linalg.norm(raw[-3] - raw[-2]))
    d2 = float(np.linalg.norm(raw[-2] - raw[-1]))
    if d1 <= floor or d2 <= floor:
        return math.nan
    e1, e2, e3 = eps_list[-3], eps_list[-2], eps_list[-1]
    target = math.log(d1 / d2)
    lo, hi = ORDER_SEARCH

    def residual(p: float) -> float:
        return _spacing_ratio(p, e1, e2, e3) - target

    if residual(lo) * residual(hi) > 0:
        # outside the search range; report the log-ratio over the whole span
        return target / math.log(math.sqrt(e1 / e3))
    return float(brentq(residual, lo, hi, xtol=1e-12))


def _combine(raw: list[np.ndarray], scheme: FDScheme, scale: float, derivative_order: int) -> DerivativeResult:
    eps_list = scheme.eps_list
    floor = (
        loopcalc_setting('ORDER_NOISE_FACTOR') * np.finfo(float).eps
        * max(1.0, scale) / eps_list[-1] ** derivative_order
    )
    if scheme.richardson:
        last = richardson_table(raw, eps_list, scheme.error_power)[-1]
        value, previous = last[-1], last[-2]
    else:
        value, previous = raw[-1], raw[-2]
    return DerivativeResult(
        value=value,
        est_order=observed_order(raw, eps_list, floor),
        est_error=float(np.linalg.norm(value - previous)),
    )


def _first_derivative(g: Callable[[float], np.ndarray], scheme: FDScheme) -> DerivativeResult:
    raw: list[np.ndarray] = []
    scale = 0.0
    at_zero = g(0.0) if scheme.stencil is Stencil.FORWARD else None
    for eps in scheme.eps_list:
        plus = g(eps)
        minus = g(-eps) if at_zero is None else at_zero
        scale = max(scale, float(np.linalg.norm(plus)), float(np.linalg.norm(minus)))
        if at_zero is None:
            raw.append((plus - minus) / (2.0 * eps))
        else:
            raw.append((plus - minus) / eps)
    return _combine(raw, scheme, scale, derivative_order=1)


def _mixed_derivative(g: Callable[[float, float], np.ndarray], scheme: FDScheme) -> DerivativeResult:
    raw: list[np.ndarray] = []
    scale = 0.0
    at_zero = g(0.0, 0.0) if scheme.stencil is Stencil.FORWARD else None
    for eps in scheme.eps_list:
        if at_zero is None:
            corners = (g(eps, eps), g(-eps, eps), g(eps, -eps), g(-eps, -eps))
            raw.append((corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * eps * eps))
        else:
            corners = (g(eps, eps), at_zero)
            raw.append((corners[0] - corners[1]) / (eps * eps))
        scale = max(scale, *(float(np.linalg.norm(c)) for c in corners))
    return _combine(raw, scheme, scale, derivative_order=2)


def _check_radius(S: Section, v: Point, scheme: FDScheme) -> None:
    reach = max(scheme.eps_list) * math.hypot(*v)
    if reach > S.radius:
        raise RadiusExceeded(f"Probe reach {reach:g} exceeds the {S.name} section radius {S.radius:g}.")


def _straight_probe(x: Point, v: Point, eps: float) -> Path:
    return segment(x, _shift(x, v, eps))


# -----------------------------
# DERIVATIVE OPERATORS
# -----------------------------
def mandelstam_derivative(f: PathFunctional, pi: Path, v: Sequence[float], scheme: FDScheme | None = None,
                          probe: Probe | None = None) -> DerivativeResult:
    """D_v f(pi): derivative under appending an infinitesimal segment along v at the endpoint.

    ``probe(x, v, eps)`` builds the appended piece; the default is the straight
    segment x -> x + eps*v. Any probe tangent to v at x gives the same limit.
    """
    scheme = scheme or FDScheme()
    v = direction(v, pi.dim)
    x = endpoint(pi)
    probe = probe or _straight_probe
    return _first_derivative(lambda eps: f(compose(pi, probe(x, v, eps))), scheme)


def section_derivative(f: PathFunctional, S: Section, v: Sequence[float],
                       scheme: FDScheme | None = None) -> DerivativeResult:
    scheme = scheme or FDScheme()
    v = direction(v, len(S.center))
    _check_radius(S, v, scheme)
    return _first_derivative(lambda eps: f(S(_shift(S.center, v, eps))), scheme)


def connection_derivative(f: PathFunctional, S: Section, mu: int,
                          scheme: FDScheme | None = None) -> DerivativeResult:
    """delta_mu f: move along the section to x + eps*e_mu, then return straight to x."""
    scheme = scheme or FDScheme()
    x = S.center
    e = unit(len(x), mu)
    _check_radius(S, e, scheme)

    def g(eps: float) -> np.ndarray:
        y = _shift(x, e, eps)
        return f(compose(S(y), segment(y, x)))

    return _first_derivative(g, scheme)


def _loop_argument(pi: Path, gamma: Path, u: Sequence[float], v: Sequence[float]):
    """Validate inputs and return (eps1, eps2) -> pi . box . pi^-1 . gamma."""
    u = direction(u, pi.dim)
    v = direction(v, pi.dim)
    if collinear(u, v, loopcalc_setting('COLLINEAR_TOL')):
        raise DependentDirections(f"Directions {u} and {v} are linearly dependent.")
    x = endpoint(pi)
    back = inverse(pi)
    # gamma must start where pi does
    compose(back, gamma)
    return lambda eps1, eps2: compose_all(pi, parallelogram(x, u, v, eps1, eps2), back, gamma)


def loop_derivative(f: PathFunctional, pi: Path, gamma: Path, u: Sequence[float], v: Sequence[float],
                    scheme: FDScheme | None = None) -> DerivativeResult:
    """Delta_{u,v}(pi) f(gamma): mixed second derivative of f(pi . box . pi^-1 . gamma).

    ``gamma`` must start at the base point of ``pi`` but need not be closed.
    Open continuations are accepted on purpose: the commutator check passes
    ``gamma = pi``, and the identity holds for any path based at ``pi.base``.
    """
    scheme = scheme or FDScheme()
    argument = _loop_argument(pi, gamma, u, v)
    return _mixed_derivative(lambda eps1, eps2: f(argument(eps1, eps2)), scheme)


def loop_homotopy_derivative(f: PathFunctional, pi: Path, gamma: Path, u: Sequence[float], v: Sequence[float],
                             scheme: FDScheme | None = None) -> DerivativeResult:
    """d/ds of f(pi . box_{s,s} . pi^-1 . gamma) at s = 0; zero for differentiable f.

    ``gamma`` follows the same rule as in ``loop_derivative``.
    """
    scheme = scheme or FDScheme()
    argument = _loop_argument(pi, gamma, u, v)
    return _first_derivative(lambda s: f(argument(s, s)), scheme)


def _finite_min(*orders: float) -> float:
    finite = [o for o in orders if not math.isnan(o)]
    return min(finite) if finite else math.nan


def commutator_mandelstam(f: PathFunctional, pi: Path, mu: int, nu: int,
                          scheme: FDScheme | None = None) -> DerivativeResult:
    """[D_mu, D_nu] f(pi) by nested central differences."""
    scheme = scheme or FDScheme()
    if mu == nu:
        raise IndexOutOfRange(f"The commutator needs two distinct directions, got {mu} twice.")
    e_mu, e_nu = unit(pi.dim, mu), unit(pi.dim, nu)

    def inner(e: Point) -> PathFunctional:
        return PathFunctional(
            lambda p: mandelstam_derivative(f, p, e, scheme).value,
            f.shape,
            name=f"D{f.name}",
        )

    forward = mandelstam_derivative(inner(e_nu), pi, e_mu, scheme)
    backward = mandelstam_derivative(inner(e_mu), pi, e_nu, scheme)
    return DerivativeResult(
        value=forward.value - backward.value,
        est_order=_finite_min(forward.est_order, backward.est_order),
        est_error=forward.est_error + backward.est_error,
    )


def decomposition_residual(f: PathFunctional, S: Section, v: Sequence[float],
                           scheme: FDScheme | None = None) -> tuple[float, float]:
    """Residual of the section split D~_v f = v^mu D_mu f + v^mu delta_mu f at the section center.

    Returns (residual norm, combined est_error of all terms).
    """
    scheme = scheme or FDScheme()
    n = len(S.center)
    v = direction(v, n)
    pi = S.center_path()
    total = section_derivative(f, S, v, scheme)
    residual = total.value.copy()
    error = total.est_error
    for mu in range(1, n + 1):
        weight = v[mu - 1]
        if weight == 0.0:
            continue
        horizontal = mandelstam_derivative(f, pi, unit(n, mu), scheme)
        vertical = connection_derivative(f, S, mu, scheme)
        residual -= weight * (horizontal.value + vertical.value)
        error += abs(weight) * (horizontal.est_error + vertical.est_error)
    logger.debug("decomposition residual %.3e (est_error %.3e)", np.linalg.norm(residual), error)
    return float(np.linalg.norm(residual)), error
