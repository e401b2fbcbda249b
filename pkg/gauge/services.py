import logging
from typing import Sequence

import numpy as np

from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import GroupTag
from loopcalc.sysutils.exceptions import DimMismatch, IndexOutOfRange, ShapeMismatch
from paths.models import Path, as_point

from .models import ConnectionField, IntegratorOptions

logger = logging.getLogger(__name__)


PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def su2_generator(k: int) -> np.ndarray:
    """i * sigma_k for k = 1, 2, 3."""
    return 1j * PAULI[k - 1]


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


def _index(A: ConnectionField, mu: int) -> int:
    if not 1 <= mu <= A.dim:
        raise IndexOutOfRange(f"Direction index {mu} is outside 1..{A.dim}.")
    return mu - 1


def _point(A: ConnectionField, x: Sequence[float]) -> np.ndarray:
    try:
        return np.array(as_point(x, A.dim))
    except DimMismatch as exc:
        raise DimMismatch(f"Field has dimension {A.dim}: {exc}") from exc


def potentials_at(A: ConnectionField, points: np.ndarray) -> np.ndarray:
    """A_mu at each of ``points`` (shape (k, n)), returned with shape (k, n, d, d)."""
    return A.C[None] + np.einsum('mnij,kn->kmij', A.D, points)


def eval_field(A: ConnectionField, x: Sequence[float], mu: int) -> np.ndarray:
    m = _index(A, mu)
    return A.C[m] + np.einsum('nij,n->ij', A.D[m], _point(A, x))


def field_strength(A: ConnectionField, x: Sequence[float], mu: int, nu: int) -> np.ndarray:
    """F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu], exact for affine fields."""
    m, n = _index(A, mu), _index(A, nu)
    point = _point(A, x)
    a_mu = A.C[m] + np.einsum('kij,k->ij', A.D[m], point)
    a_nu = A.C[n] + np.einsum('kij,k->ij', A.D[n], point)
    return A.D[n, m] - A.D[m, n] + commutator(a_mu, a_nu)


def algebra_distance(X: np.ndarray, Y: np.ndarray) -> float:
    X, Y = np.asarray(X), np.asarray(Y)
    if X.shape != Y.shape:
        raise ShapeMismatch(f"Cannot compare shapes {X.shape} and {Y.shape}.")
    return float(np.linalg.norm(X - Y))


def relative_error(value: np.ndarray, oracle: np.ndarray) -> float:
    """Frobenius error relative to max(|oracle|, 1); group-scale values are O(1)."""
    return algebra_distance(value, oracle) / max(float(np.linalg.norm(oracle)), 1.0)


def project_to_group(stack: np.ndarray, group: GroupTag) -> np.ndarray:
    """Polar projection of a stack of matrices onto U(d); su2 also gets det 1."""
    if group is GroupTag.GL:
        return stack
    u, _, vh = np.linalg.svd(stack)
    unitary = u @ vh
    if group is GroupTag.SU2:
        unitary = unitary / np.sqrt(np.linalg.det(unitary))[..., None, None]
    return unitary


def check_group_element(U: np.ndarray, group: GroupTag) -> bool:
    tol = loopcalc_setting('GROUP_TOL')
    if group is GroupTag.GL:
        return abs(np.linalg.det(U)) > 0.0
    unitary = np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])) <= tol
    if group is GroupTag.SU2:
        return unitary and abs(np.linalg.det(U) - 1.0) <= tol
    return unitary


def ordered_product(stack: np.ndarray) -> np.ndarray:
    """stack[0] @ stack[1] @ ... by pairwise batched multiplication."""
    size = stack.shape[-1]
    while len(stack) > 1:
        if len(stack) % 2:
            stack = np.concatenate([stack, np.eye(size, dtype=stack.dtype)[None]])
        stack = stack[0::2] @ stack[1::2]
    return stack[0]


def _rk4_propagators(start: np.ndarray, middle: np.ndarray, end: np.ndarray, h: float) -> np.ndarray:
    # One classical RK4 step of W' = W M(s) maps W to W @ Phi, with Phi independent of W.
    eye = np.eye(start.shape[-1], dtype=complex)
    k1 = start
    k2 = (eye + 0.5 * h * k1) @ middle
    k3 = (eye + 0.5 * h * k2) @ middle
    k4 = (eye + h * k3) @ end
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def holonomy(A: ConnectionField, p: Path, opts: IntegratorOptions | None = None) -> np.ndarray:
    """Path-ordered transport W(1) of dW/ds = W A_mu(x(s)) dx^mu/ds, W(0) = I.

    Every polyline segment gets ``steps_per_segment`` RK4 substeps. With this
    ordering W(p.q) = W(p) W(q). Open paths give Wilson lines, loops give
    holonomies.
    """
    opts = opts or IntegratorOptions()
    if p.dim != A.dim:
        raise DimMismatch(f"Path dimension {p.dim} does not match field dimension {A.dim}.")
    if not p.vertices:
        return np.eye(A.size, dtype=complex)

    points = p.points()
    starts = points[:-1]
    deltas = points[1:] - starts

    # Along x(s) = x0 + s*dx the integrand A_mu(x(s)) dx^mu is P + s*Q.
    P = np.einsum('km,kmij->kij', deltas, potentials_at(A, starts))
    Q = np.einsum('km,mnij,kn->kij', deltas, A.D, deltas)

    steps = opts.steps_per_segment
    h = 1.0 / steps
    s = (np.arange(steps) * h)[None, :, None, None]
    start = P[:, None] + s * Q[:, None]
    middle = start + 0.5 * h * Q[:, None]
    end = start + h * Q[:, None]

    size = A.size
    propagators = _rk4_propagators(
        start.reshape(-1, size, size),
        middle.reshape(-1, size, size),
        end.reshape(-1, size, size),
        h,
    )
    if opts.reunitarize_for(A.group):
        propagators = project_to_group(propagators, A.group)
    elif A.group is not GroupTag.GL:
        logger.debug("holonomy without reunitarization over %d substeps", len(propagators))
    return ordered_product(propagators)
