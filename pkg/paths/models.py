import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from loopcalc.sysutils.exceptions import DimMismatch, LoopCalcError


Point = tuple[float, ...]


def as_point(coords: Iterable[float], dim: int | None = None) -> Point:
	'''Coerce coordinates to an immutable point of finite floats.'''
	point = tuple(float(c) for c in coords)
	if not point:
		raise LoopCalcError("A point needs at least one coordinate.")
	if not all(math.isfinite(c) for c in point):
		raise LoopCalcError(f"Non-finite coordinate in {point}.")
	if dim is not None and len(point) != dim:
		raise DimMismatch(f"Expected {dim} coordinates, got {len(point)}.")
	return point


@dataclass(frozen=True)
class Path:
	"""A polyline in R^n: the base point followed by the ordered vertices.

	The last vertex is the endpoint; a path without vertices is the constant
	path at ``base``. Values are immutable so paths can be shared freely
	between threads.
	"""
	base: Point
	vertices: tuple[Point, ...] = ()

	def __post_init__(self):
		base = as_point(self.base)
		object.__setattr__(self, 'base', base)
		object.__setattr__(self, 'vertices', tuple(as_point(v, len(base)) for v in self.vertices))

	@property
	def dim(self) -> int:
		return len(self.base)

	@property
	def segment_count(self) -> int:
		return len(self.vertices)

	def points(self) -> np.ndarray:
		return np.array((self.base, *self.vertices), dtype=float)

	def __str__(self) -> str:
		return " -> ".join(str(p) for p in (self.base, *self.vertices))


# A loop is a path whose endpoint is its base; closure is checked by ``paths.services.is_loop``.
Loop = Path
