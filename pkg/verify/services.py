import logging
import math
import sys
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, NamedTuple

import numpy as np
from tqdm import tqdm

from calculus.models import FDScheme, PathFunctional, Section
from calculus.services import (
    arc_section,
    commutator_mandelstam,
    connection_derivative,
    decomposition_residual,
    holonomy_functional,
    loop_derivative,
    loop_homotopy_derivative,
    mandelstam_derivative,
    transport_section,
    unit,
)
from gauge.models import GROUP_SIZE, ConnectionField, IntegratorOptions
from gauge.services import (
    commutator,
    eval_field,
    field_strength,
    relative_error,
    su2_generator,
)
from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import BIANCHI_IDENTITIES, GroupTag, Identity
from loopcalc.sysutils.exceptions import DimMismatch, DimTooSmall, IndexOutOfRange, LoopCalcError
from loopcalc.sysutils.tasks import map_in_order
from paths.models import Path, Point, as_point
from paths.services import compose, compose_all, constant, endpoint, inverse

from .models import IdentityRecord, RandomSpec, Tolerances, VerificationReport

logger = logging.getLogger(__name__)

_MASK = (1 << 64) - 1


class SplitMix64:
    """The splitmix64 stream: identical sequences for a seed on every platform."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def next_box(self, half_width: float = 1.0) -> float:
        return half_width * (2.0 * self.next_unit() - 1.0)

    def next_point(self, dim: int, half_width: float = 1.0) -> Point:
        return tuple(self.next_box(half_width) for _ in range(dim))


def random_path(spec: RandomSpec, closed: bool, base: Point | None = None,
                rng: SplitMix64 | None = None) -> Path:
    """Polyline with 3..12 uniformly drawn vertices (per ``spec``) in the box.

    A fresh stream is seeded from ``spec.seed`` unless ``rng`` is passed, in
    which case draws continue from it. When ``closed`` the last vertex is the
    base point exactly.
    """
    rng = rng or SplitMix64(spec.seed)
    span = spec.max_vertices - spec.min_vertices + 1
    count = spec.min_vertices + rng.next_u64() % span
    start = as_point(base, spec.dim) if base is not None else rng.next_point(spec.dim, spec.box)
    vertices = [rng.next_point(spec.dim, spec.box) for _ in range(count)]
    if closed:
        vertices[-1] = start
    return Path(start, tuple(vertices))


def _random_algebra(rng: SplitMix64, group: GroupTag, d: int, scale: float) -> np.ndarray:
    if group is GroupTag.U1:
        return np.array([[1j * rng.next_box(scale)]])
    if group is GroupTag.SU2:
        return sum(rng.next_box(scale) * su2_generator(k) for k in (1, 2, 3))
    real = np.array([[rng.next_box(scale) for _ in range(d)] for _ in range(d)])
    imag = np.array([[rng.next_box(scale) for _ in range(d)] for _ in range(d)])
    return real + 1j * imag


def random_field(spec: RandomSpec, group: GroupTag, d: int | None = None,
                 scale: float = 0.5, slope: float = 0.25) -> ConnectionField:
    """Random affine field: C entries up to ``scale``, D entries up to ``slope``."""
    size = GROUP_SIZE.get(group, d)
    if size is None:
        raise LoopCalcError("gl fields need an explicit matrix size.")
    rng = SplitMix64(spec.seed)
    n = spec.dim
    C = np.array([_random_algebra(rng, group, size, scale) for _ in range(n)])
    D = np.array([[_random_algebra(rng, group, size, slope) for _ in range(n)] for _ in range(n)])
    return ConnectionField(group=group, C=C, D=D)


def _su2_affine() -> ConnectionField:
    s1, s2, s3 = (su2_generator(k) for k in (1, 2, 3))
    C = np.array([0.3 * s1, 0.4 * s2, 0.2 * s3])
    D = np.zeros((3, 3, 2, 2), dtype=complex)
    D[0, 1] = 0.25 * s3
    D[1, 0] = -0.1 * s1
    D[2, 0] = 0.15 * s2
    D[1, 2] = 0.2 * s1
    D[0, 2] = -0.05 * s2
    return ConnectionField(group=GroupTag.SU2, C=C, D=D)


_REFERENCE_FIELDS: dict[str, Callable[[], ConnectionField]] = {
    "zero": lambda: ConnectionField.zero(GroupTag.SU2, 3),
    "u1_uniform": lambda: ConnectionField.uniform_abelian(1.0, dim=2),
    "su2_affine": _su2_affine,
}


def reference_field(name: str) -> ConnectionField:
    try:
        return _REFERENCE_FIELDS[name]()
    except KeyError:
        raise LoopCalcError(f"Unknown reference field '{name}'; choose from {', '.join(_REFERENCE_FIELDS)}.")


def _triple(A: ConnectionField, mu: int, nu: int, xi: int) -> tuple[int, int, int]:
    if A.dim < 3:
        raise DimTooSmall(f"The Bianchi identity needs dimension 3 or more, field has {A.dim}.")
    if len({mu, nu, xi}) != 3:
        raise IndexOutOfRange(f"Bianchi indices must be distinct, got {(mu, nu, xi)}.")
    for index in (mu, nu, xi):
        if not 1 <= index <= A.dim:
            raise IndexOutOfRange(f"Direction index {index} is outside 1..{A.dim}.")
    return mu, nu, xi


def _cyclic(mu: int, nu: int, xi: int):
    return ((mu, nu, xi), (nu, xi, mu), (xi, mu, nu))


def bianchi_analytic(A: ConnectionField, x, mu: int, nu: int, xi: int) -> float:
    """|sum_cyc (d_mu F_{nu xi} + [A_mu, F_{nu xi}])| with exact derivatives of the affine field.

    d_mu F_{nu xi} = [D_{nu mu}, A_xi] + [A_nu, D_{xi mu}].
    """
    _triple(A, mu, nu, xi)
    total = np.zeros((A.size, A.size), dtype=complex)
    for a, b, c in _cyclic(mu, nu, xi):
        a_a, a_b, a_c = (eval_field(A, x, k) for k in (a, b, c))
        d_strength = commutator(A.D[b - 1, a - 1], a_c) + commutator(a_b, A.D[c - 1, a - 1])
        total += d_strength + commutator(a_a, field_strength(A, x, b, c))
    return float(np.linalg.norm(total))


def bianchi_numeric(A: ConnectionField, pi: Path, mu: int, nu: int, xi: int,
                    scheme: FDScheme | None = None, opts: IntegratorOptions | None = None) -> float:
    """|sum_cyc D_mu Delta_{nu xi} W| with every derivative taken by finite differences."""
    _triple(A, mu, nu, xi)
    scheme = scheme or FDScheme()
    W = holonomy_functional(A, opts)
    here = constant(pi.base)
    total = np.zeros((A.size, A.size), dtype=complex)
    for a, b, c in _cyclic(mu, nu, xi):
        e_b, e_c = unit(A.dim, b), unit(A.dim, c)
        curvature = PathFunctional(
            lambda p, e_b=e_b, e_c=e_c: loop_derivative(W, p, here, e_b, e_c, scheme).value,
            W.shape,
            name="DeltaW",
        )
        total += mandelstam_derivative(curvature, pi, unit(A.dim, a), scheme).value
    return float(np.linalg.norm(total))


# -----------------------------
# IDENTITY SUITE
# -----------------------------
class _Outcome(NamedTuple):
    error: float
    # the sample passes when error <= allowance
    allowance: float
    order: float = math.nan
    order_ok: bool = True


@dataclass(frozen=True)
class _Context:
    A: ConnectionField
    W: PathFunctional
    spec: RandomSpec
    scheme: FDScheme
    tolerances: Tolerances

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(combinations(range(1, self.A.dim + 1), 2))

    @property
    def triples(self) -> list[tuple[int, int, int]]:
        return list(combinations(range(1, self.A.dim + 1), 3))

    def path(self, rng: SplitMix64, base: Point | None = None, closed: bool = False) -> Path:
        return random_path(self.spec, closed, base=base, rng=rng)


def _order_between(order: float, low: float, high: float = math.inf) -> bool:
    return math.isnan(order) or low <= order <= high


def _homomorphism(ctx: _Context, rng: SplitMix64, k: int):
    alpha = ctx.path(rng)
    beta = ctx.path(rng, base=endpoint(alpha))
    tol = ctx.tolerances.homomorphism

    def run() -> _Outcome:
        product = ctx.W(alpha) @ ctx.W(beta)
        return _Outcome(float(np.linalg.norm(ctx.W(compose(alpha, beta)) - product)), tol)

    return run


def _inverse(ctx: _Context, rng: SplitMix64, k: int):
    alpha = ctx.path(rng)
    tol = ctx.tolerances.inverse

    def run() -> _Outcome:
        return _Outcome(float(np.linalg.norm(ctx.W(inverse(alpha)) - np.linalg.inv(ctx.W(alpha)))), tol)

    return run


def _thin_invariance(ctx: _Context, rng: SplitMix64, k: int):
    rho = ctx.path(rng)
    spur = ctx.path(rng, base=endpoint(rho))
    xi = ctx.path(rng, base=endpoint(rho))
    tol = ctx.tolerances.thin_invariance

    def run() -> _Outcome:
        with_spur = ctx.W(compose_all(rho, spur, inverse(spur), xi))
        return _Outcome(float(np.linalg.norm(with_spur - ctx.W(compose(rho, xi)))), tol)

    return run


def _mandelstam(ctx: _Context, rng: SplitMix64, k: int):
    pi = ctx.path(rng)
    mu = k % ctx.A.dim + 1
    t = ctx.tolerances

    def run() -> _Outcome:
        result = mandelstam_derivative(ctx.W, pi, unit(ctx.A.dim, mu), ctx.scheme)
        oracle = ctx.W(pi) @ eval_field(ctx.A, endpoint(pi), mu)
        return _Outcome(
            relative_error(result.value, oracle), t.mandelstam, result.est_order,
            _order_between(result.est_order, t.min_order, t.max_order),
        )

    return run


def _arc_around(pi: Path) -> Section:
    x = np.asarray(endpoint(pi))
    return arc_section(pi.base, tuple(x - 0.5), tuple(x))


def _decomposition(ctx: _Context, rng: SplitMix64, k: int):
    pi = ctx.path(rng)
    v = rng.next_point(ctx.A.dim)
    if max(abs(c) for c in v) < 0.1:
        v = unit(ctx.A.dim, k % ctx.A.dim + 1)
    tol = ctx.tolerances.decomposition

    def run() -> _Outcome:
        residual, est_error = decomposition_residual(ctx.W, _arc_around(pi), v, ctx.scheme)
        return _Outcome(residual, max(tol, 10.0 * est_error))

    return run


def _decomposition_transport(ctx: _Context, rng: SplitMix64, k: int):
    pi = ctx.path(rng)
    mu = k % ctx.A.dim + 1
    tol = ctx.tolerances.decomposition_transport

    def run() -> _Outcome:
        vertical = connection_derivative(ctx.W, transport_section(pi), mu, ctx.scheme)
        return _Outcome(float(np.linalg.norm(vertical.value)), tol, vertical.est_order)

    return run


def _loop_setup(ctx: _Context, rng: SplitMix64, k: int):
    pi = ctx.path(rng)
    gamma = ctx.path(rng, base=pi.base, closed=True)
    mu, nu = ctx.pairs[k % len(ctx.pairs)]
    return pi, gamma, mu, nu


def _curvature(ctx: _Context, rng: SplitMix64, k: int):
    pi, gamma, mu, nu = _loop_setup(ctx, rng, k)
    t = ctx.tolerances

    def run() -> _Outcome:
        n = ctx.A.dim
        result = loop_derivative(ctx.W, pi, gamma, unit(n, mu), unit(n, nu), ctx.scheme)
        transport = ctx.W(pi)
        strength = field_strength(ctx.A, endpoint(pi), mu, nu)
        oracle = transport @ strength @ np.linalg.inv(transport) @ ctx.W(gamma)
        return _Outcome(
            relative_error(result.value, oracle), t.curvature, result.est_order,
            _order_between(result.est_order, t.min_order),
        )

    return run


def _antisymmetry(ctx: _Context, rng: SplitMix64, k: int):
    pi, gamma, mu, nu = _loop_setup(ctx, rng, k)
    tol = ctx.tolerances.antisymmetry

    def run() -> _Outcome:
        u, v = unit(ctx.A.dim, mu), unit(ctx.A.dim, nu)
        forward = loop_derivative(ctx.W, pi, gamma, u, v, ctx.scheme)
        backward = loop_derivative(ctx.W, pi, gamma, v, u, ctx.scheme)
        error = float(np.linalg.norm(forward.value + backward.value))
        return _Outcome(error, max(tol, forward.est_error + backward.est_error))

    return run


def _commutator(ctx: _Context, rng: SplitMix64, k: int):
    pi = ctx.path(rng)
    mu, nu = ctx.pairs[k % len(ctx.pairs)]
    tol = ctx.tolerances.commutator

    def run() -> _Outcome:
        nested = commutator_mandelstam(ctx.W, pi, mu, nu, ctx.scheme)
        n = ctx.A.dim
        oracle = loop_derivative(ctx.W, pi, pi, unit(n, mu), unit(n, nu), ctx.scheme)
        return _Outcome(relative_error(nested.value, oracle.value), tol, nested.est_order)

    return run


def _loop_homotopy(ctx: _Context, rng: SplitMix64, k: int):
    pi, gamma, mu, nu = _loop_setup(ctx, rng, k)
    tol = ctx.tolerances.loop_homotopy

    def run() -> _Outcome:
        n = ctx.A.dim
        result = loop_homotopy_derivative(ctx.W, pi, gamma, unit(n, mu), unit(n, nu), ctx.scheme)
        return _Outcome(float(np.linalg.norm(result.value)), tol, result.est_order)

    return run


def _bianchi_analytic(ctx: _Context, rng: SplitMix64, k: int):
    x = rng.next_point(ctx.A.dim, ctx.spec.box)
    mu, nu, xi = ctx.triples[k % len(ctx.triples)]
    tol = ctx.tolerances.bianchi_analytic

    def run() -> _Outcome:
        return _Outcome(bianchi_analytic(ctx.A, x, mu, nu, xi), tol)

    return run


def _bianchi_numeric(ctx: _Context, rng: SplitMix64, k: int):
    pi = ctx.path(rng)
    mu, nu, xi = ctx.triples[k % len(ctx.triples)]
    tol = ctx.tolerances.bianchi_numeric

    def run() -> _Outcome:
        return _Outcome(bianchi_numeric(ctx.A, pi, mu, nu, xi, ctx.scheme), tol)

    return run


_SAMPLERS = {
    Identity.HOMOMORPHISM: _homomorphism,
    Identity.INVERSE: _inverse,
    Identity.THIN_INVARIANCE: _thin_invariance,
    Identity.MANDELSTAM: _mandelstam,
    Identity.DECOMPOSITION: _decomposition,
    Identity.DECOMPOSITION_TRANSPORT: _decomposition_transport,
    Identity.CURVATURE: _curvature,
    Identity.ANTISYMMETRY: _antisymmetry,
    Identity.COMMUTATOR: _commutator,
    Identity.LOOP_HOMOTOPY: _loop_homotopy,
    Identity.BIANCHI_ANALYTIC: _bianchi_analytic,
    Identity.BIANCHI_NUMERIC: _bianchi_numeric,
}


def _summarize(identity: Identity, outcomes: list[_Outcome | None], tolerance: float) -> IdentityRecord:
    # a sample that raised counts as an infinite error
    errors, passed, orders = [], True, []
    for outcome in outcomes:
        if outcome is None or math.isnan(outcome.error):
            errors.append(math.inf)
            passed = False
            continue
        errors.append(outcome.error)
        passed = passed and outcome.error <= outcome.allowance and outcome.order_ok
        if not math.isnan(outcome.order):
            orders.append(outcome.order)
    return IdentityRecord(
        identity=identity,
        samples=len(outcomes),
        max_error=max(errors, default=0.0),
        mean_error=sum(errors) / len(errors) if errors else 0.0,
        observed_order=min(orders) if orders else math.nan,
        tolerance=tolerance,
        passed=passed,
    )


def run_identity_suite(A: ConnectionField, spec: RandomSpec, scheme: FDScheme | None = None,
                       tolerances: Tolerances | None = None, workers: int | None = None,
                       progress: bool = False) -> VerificationReport:
    """Check every identity on seeded samples and collect one record per identity.

    Inputs are drawn sequentially from per-identity splitmix64 streams; only
    the evaluations run on the thread pool, so the report does not depend on
    ``workers``.
    """
    if A.dim < 2:
        raise DimTooSmall(f"The identity suite needs dimension 2 or more, field has {A.dim}.")
    if spec.dim != A.dim:
        raise DimMismatch(f"Sampling dimension {spec.dim} does not match field dimension {A.dim}.")
    scheme = scheme or FDScheme()
    tolerances = tolerances or Tolerances()
    workers = workers or loopcalc_setting('VERIFY_WORKERS')
    ctx = _Context(A=A, W=holonomy_functional(A), spec=spec, scheme=scheme, tolerances=tolerances)

    identities = list(Identity)
    if A.dim < 3:
        logger.warning("Field dimension %d < 3: skipping %s.", A.dim, ", ".join(i.value for i in BIANCHI_IDENTITIES))
        identities = [i for i in identities if i not in BIANCHI_IDENTITIES]

    master = SplitMix64(spec.seed)
    stream_seeds = {identity: master.next_u64() for identity in Identity}

    records = []
    for identity in tqdm(identities, desc="identities", file=sys.stderr, disable=not progress, leave=False):
        rng = SplitMix64(stream_seeds[identity])
        sampler = _SAMPLERS[identity]
        tasks = [sampler(ctx, rng, k) for k in range(tolerances.sample_count(identity))]
        outcomes = map_in_order(lambda task: task(), tasks, max_workers=workers)
        record = _summarize(identity, outcomes, tolerances.tolerance(identity))
        logger.info(
            "%s: %d samples, max error %.3e, %s",
            identity.value, record.samples, record.max_error, "pass" if record.passed else "FAIL",
        )
        records.append(record)
    return VerificationReport(records=records)
