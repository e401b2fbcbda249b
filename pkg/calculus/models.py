import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import Stencil
from loopcalc.sysutils.exceptions import ShapeMismatch
from paths.models import Path, Point, as_point


@dataclass(frozen=True)
class PathFunctional:
	"""A deterministic map from paths to d x d complex matrices (scalars are 1 x 1)."""
	evaluate: Callable[[Path], np.ndarray]
	shape: tuple[int, int]
	name: str = "f"

	def __call__(self, p: Path) -> np.ndarray:
		value = np.asarray(self.evaluate(p), dtype=complex)
		if value.size != self.shape[0] * self.shape[1]:
			raise ShapeMismatch(f"{self.name} returned shape {value.shape}, expected {self.shape}.")
		return value.reshape(self.shape)


@dataclass(frozen=True)
class Section:
	"""A family of paths y -> Phi(y) from the base point to y, for |y - center| <= radius."""
	center: Point
	evaluate: Callable[[Point], Path]
	radius: float
	name: str = "section"

	def __post_init__(self):
		object.__setattr__(self, 'center', as_point(self.center))

	def __call__(self, y: Point) -> Path:
		return self.evaluate(as_point(y, len(self.center)))

	def center_path(self) -> Path:
		return self(self.center)


class FDScheme(BaseModel):
	model_config = ConfigDict(frozen=True)

	eps_list: tuple[float, ...] = Field(default_factory=lambda: tuple(loopcalc_setting('EPS_LIST')))
	stencil: Stencil = Stencil.CENTRAL
	richardson: bool = Field(default_factory=lambda: loopcalc_setting('RICHARDSON'))

	@field_validator('eps_list')
	@classmethod
	def _strictly_decreasing(cls, value: tuple[float, ...]) -> tuple[float, ...]:
		if len(value) < 2:
			raise ValueError("At least two step sizes are required.")
		if not all(math.isfinite(eps) and eps > 0 for eps in value):
			raise ValueError("Step sizes must be positive and finite.")
		if any(a <= b for a, b in zip(value, value[1:])):
			raise ValueError("Step sizes must be strictly decreasing.")
		return value

	@property
	def error_power(self) -> int:
		'''Power of eps eliminated per Richardson column.'''
		return 2 if self.stencil is Stencil.CENTRAL else 1


@dataclass(frozen=True, eq=False)
class DerivativeResult:
	value: np.ndarray
	# observed convergence order of the raw estimates; nan when they agree to roundoff
	est_order: float
	est_error: float
