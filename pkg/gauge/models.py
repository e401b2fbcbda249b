from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import GroupTag
from loopcalc.sysutils.exceptions import AlgebraInvariantError, LoopCalcError, ShapeMismatch


# Matrix size fixed by the group tag; gl takes its size from the data.
GROUP_SIZE = {GroupTag.U1: 1, GroupTag.SU2: 2}


def algebra_violation(X: np.ndarray, group: GroupTag) -> float:
	'''How far ``X`` is from the Lie algebra of ``group`` (0 for gl).'''
	if group is GroupTag.GL:
		return 0.0
	violation = float(np.linalg.norm(X + X.conj().T))
	if group is GroupTag.SU2:
		violation = max(violation, abs(np.trace(X)))
	return violation


@dataclass(frozen=True, eq=False)
class ConnectionField:
	"""Affine gauge potential A_mu(x) = C_mu + sum_nu D_{mu nu} x^nu.

	``C`` has shape (n, d, d) and ``D`` shape (n, n, d, d); direction indices
	are 1-based in the public API and 0-based in these arrays.
	"""
	group: GroupTag
	C: np.ndarray
	D: np.ndarray

	def __post_init__(self):
		C = np.array(self.C, dtype=complex)
		D = np.array(self.D, dtype=complex)
		if C.ndim != 3 or C.shape[1] != C.shape[2]:
			raise ShapeMismatch(f"C must have shape (n, d, d), got {C.shape}.")
		n, d = C.shape[0], C.shape[1]
		if n < 1:
			raise ShapeMismatch("A connection field needs at least one direction.")
		if D.shape != (n, n, d, d):
			raise ShapeMismatch(f"D must have shape {(n, n, d, d)}, got {D.shape}.")
		expected = GROUP_SIZE.get(self.group)
		if expected is not None and d != expected:
			raise ShapeMismatch(f"{self.group.value} fields are {expected}x{expected}, got {d}x{d}.")

		tol = loopcalc_setting('ALGEBRA_TOL')
		for label, matrix in [(f"C{m + 1}", C[m]) for m in range(n)] + [
			(f"D{m + 1}{k + 1}", D[m, k]) for m in range(n) for k in range(n)
		]:
			if algebra_violation(matrix, self.group) > tol:
				raise AlgebraInvariantError(f"{label} is not in the {self.group.value} algebra.")

		C.setflags(write=False)
		D.setflags(write=False)
		object.__setattr__(self, 'C', C)
		object.__setattr__(self, 'D', D)

	@property
	def dim(self) -> int:
		return self.C.shape[0]

	@property
	def size(self) -> int:
		return self.C.shape[1]

	@classmethod
	def from_arrays(cls, group: GroupTag, C, D=None) -> "ConnectionField":
		C = np.asarray(C, dtype=complex)
		if D is None:
			n, d = C.shape[0], C.shape[1]
			D = np.zeros((n, n, d, d), dtype=complex)
		return cls(group=group, C=C, D=D)

	@classmethod
	def zero(cls, group: GroupTag, dim: int, size: int | None = None) -> "ConnectionField":
		d = GROUP_SIZE.get(group, size)
		if d is None:
			raise LoopCalcError("gl fields need an explicit matrix size.")
		return cls.from_arrays(group, np.zeros((dim, d, d), dtype=complex))

	@classmethod
	def uniform_abelian(cls, B: float, dim: int = 2) -> "ConnectionField":
		'''u1 symmetric gauge for a uniform field B in the (1, 2) plane.'''
		if dim < 2:
			raise LoopCalcError("A uniform field needs at least two directions.")
		D = np.zeros((dim, dim, 1, 1), dtype=complex)
		D[0, 1, 0, 0] = -0.5j * B
		D[1, 0, 0, 0] = 0.5j * B
		return cls.from_arrays(GroupTag.U1, np.zeros((dim, 1, 1), dtype=complex), D)


class IntegratorOptions(BaseModel):
	model_config = ConfigDict(frozen=True)

	steps_per_segment: int = Field(default_factory=lambda: loopcalc_setting('INTEGRATOR_STEPS'), ge=1)
	# None means: on for u1/su2, off for gl
	reunitarize: bool | None = None

	def reunitarize_for(self, group: GroupTag) -> bool:
		if self.reunitarize is None:
			return group is not GroupTag.GL
		return self.reunitarize and group is not GroupTag.GL
