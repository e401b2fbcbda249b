import logging
import math
from typing import Sequence

from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.exceptions import DimMismatch, EndpointMismatch, LoopCalcError, ZeroDirection

from .models import Loop, Path, Point, as_point

logger = logging.getLogger(__name__)


def _sub(a: Point, b: Point) -> tuple[float, ...]:
    return tuple(x - y for x, y in zip(a, b))


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    return math.fsum(x * y for x, y in zip(a, b))


def _same_point(a: Point, b: Point, tol: float) -> bool:
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def collinear(a: Sequence[float], b: Sequence[float], tol: float) -> bool:
    """True when ``b`` has no component off the line of ``a`` (relative to ``|b|``)."""
    aa = _dot(a, a)
    bb = _dot(b, b)
    if aa == 0.0 or bb == 0.0:
        return True
    t = _dot(a, b) / aa
    perp = tuple(y - t * x for x, y in zip(a, b))
    return math.sqrt(_dot(perp, perp)) <= tol * math.sqrt(bb)


def _check_dims(p: Path, q: Path) -> None:
    if p.dim != q.dim:
        raise DimMismatch(f"Path dimension {p.dim} does not match {q.dim}.")


def direction(v: Sequence[float], dim: int) -> Point:
    """Validate a direction vector: right dimension, finite and nonzero."""
    vec = as_point(v, dim)
    if all(abs(c) <= loopcalc_setting('POINT_TOL') for c in vec):
        raise ZeroDirection(f"Direction {vec} is zero.")
    return vec


def constant(x: Sequence[float]) -> Path:
    return Path(as_point(x))


def endpoint(p: Path) -> Point:
    return p.vertices[-1] if p.vertices else p.base


def is_loop(p: Path) -> bool:
    return _same_point(endpoint(p), p.base, loopcalc_setting('POINT_TOL'))


def compose(p: Path, q: Path) -> Path:
    """Concatenate ``p`` then ``q``. The result is not reduced."""
    _check_dims(p, q)
    if not _same_point(endpoint(p), q.base, loopcalc_setting('POINT_TOL')):
        raise EndpointMismatch(f"Path ends at {endpoint(p)} but the next one starts at {q.base}.")
    return Path(p.base, p.vertices + q.vertices)


def compose_all(*parts: Path) -> Path:
    result = parts[0]
    for part in parts[1:]:
        result = compose(result, part)
    return result


def inverse(p: Path) -> Path:
    points = (p.base, *p.vertices)
    return Path(points[-1], tuple(reversed(points[:-1])))


def _push(stack: list[Point], q: Point, tol: float, collinear_tol: float) -> None:
    # stack is always reduced; pushing q restores that by cancelling or merging at the top
    while True:
        last = stack[-1]
        if _same_point(last, q, tol):
            return
        if len(stack) < 2:
            stack.append(q)
            return
        incoming = _sub(q, last)
        previous = _sub(last, stack[-2])
        if not collinear(previous, incoming, collinear_tol):
            stack.append(q)
            return
        if _dot(previous, incoming) > 0:
            stack[-1] = q
            return
        # Retrace along the same line. Dropping ``last`` cancels the overlap;
        # whatever is left of either segment is re-pushed as prev -> q.
        stack.pop()


def reduce(p: Path) -> Path:
    """Canonical representative of the thin class of ``p``.

    Drops zero-length segments, merges collinear segments running the same
    way and cancels exact retraces (whole or partial) until none are left.
    """
    tol = loopcalc_setting('POINT_TOL')
    collinear_tol = loopcalc_setting('COLLINEAR_TOL')
    stack: list[Point] = [p.base]
    for vertex in p.vertices:
        _push(stack, vertex, tol, collinear_tol)
    if len(stack) - 1 < len(p.vertices):
        logger.debug("reduce: %d segments -> %d", len(p.vertices), len(stack) - 1)
    return Path(stack[0], tuple(stack[1:]))


def thin_equal(p: Path, q: Path) -> bool:
    _check_dims(p, q)
    tol = loopcalc_setting('POINT_TOL')
    rp, rq = reduce(p), reduce(q)
    if len(rp.vertices) != len(rq.vertices):
        return False
    return all(
        _same_point(a, b, tol)
        for a, b in zip((rp.base, *rp.vertices), (rq.base, *rq.vertices))
    )


def segment(x: Sequence[float], y: Sequence[float]) -> Path:
    start = as_point(x)
    end = as_point(y, len(start))
    if _same_point(start, end, loopcalc_setting('POINT_TOL')):
        return Path(start)
    return Path(start, (end,))


def parallelogram(x: Sequence[float], u: Sequence[float], v: Sequence[float], eps1: float, eps2: float) -> Loop:
    """Loop x -> x+eps1*u -> x+eps1*u+eps2*v -> x+eps2*v -> x."""
    corner = as_point(x)
    u = direction(u, len(corner))
    v = direction(v, len(corner))
    side_u = tuple(eps1 * c for c in u)
    side_v = tuple(eps2 * c for c in v)
    return Path(corner, (
        tuple(a + b for a, b in zip(corner, side_u)),
        tuple(a + b + c for a, b, c in zip(corner, side_u, side_v)),
        tuple(a + c for a, c in zip(corner, side_v)),
        corner,
    ))


def parallel_transport(alpha: Path, gamma: Path) -> Path:
    return reduce(compose(alpha, gamma))


def subdivide(p: Path, pieces: int) -> Path:
    """Split every segment into ``pieces`` equal collinear parts."""
    if pieces < 1:
        raise LoopCalcError("pieces must be at least 1.")
    vertices: list[Point] = []
    start = p.base
    for end in p.vertices:
        step = _sub(end, start)
        for k in range(1, pieces):
            vertices.append(tuple(s + (k / pieces) * d for s, d in zip(start, step)))
        vertices.append(end)
        start = end
    return Path(p.base, tuple(vertices))


def polyline_probe(x: Sequence[float], v: Sequence[float], eps: float, bend: Sequence[float] | None = None) -> Path:
    """Three-piece polyline along alpha(t) = x + t*v + t^2*bend for t in [0, eps].

    alpha(0) = x and alpha'(0) = v, so as a probe it realizes the same tangent
    vector as the straight segment from x to x + eps*v.
    """
    start = as_point(x)
    v = as_point(v, len(start))
    bend = as_point(bend, len(start)) if bend is not None else (0.0,) * len(start)

    def alpha(t: float) -> Point:
        return tuple(a + t * b + t * t * c for a, b, c in zip(start, v, bend))

    return Path(start, tuple(alpha(eps * k / 3.0) for k in (1, 2, 3)))
