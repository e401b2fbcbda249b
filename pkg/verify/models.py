import math

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveInt, field_validator, model_validator

from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import Identity


def _tolerance(name: str):
	return lambda: loopcalc_setting('TOLERANCES')[name]


class RandomSpec(BaseModel):
	'''Seed and shape of a sampled family of paths or fields.'''
	model_config = ConfigDict(frozen=True)

	seed: int = Field(ge=0, lt=2 ** 64)
	dim: PositiveInt
	min_vertices: PositiveInt = 3
	max_vertices: PositiveInt = 12
	# coordinates are drawn from [-box, box]^dim
	box: float = Field(default=1.0, gt=0)

	@model_validator(mode='after')
	def _vertex_range(self):
		if self.min_vertices > self.max_vertices:
			raise ValueError("min_vertices exceeds max_vertices.")
		return self


class Tolerances(BaseModel):
	"""Per-identity pass thresholds and sample counts.

	Loaded from ``--tol-file`` as a flat mapping of identity name to
	tolerance; ``samples`` may override per-identity sample counts.
	"""
	model_config = ConfigDict(frozen=True, extra='forbid')

	homomorphism: NonNegativeFloat = Field(default_factory=_tolerance('homomorphism'))
	inverse: NonNegativeFloat = Field(default_factory=_tolerance('inverse'))
	thin_invariance: NonNegativeFloat = Field(default_factory=_tolerance('thin_invariance'))
	mandelstam: NonNegativeFloat = Field(default_factory=_tolerance('mandelstam'))
	decomposition: NonNegativeFloat = Field(default_factory=_tolerance('decomposition'))
	decomposition_transport: NonNegativeFloat = Field(default_factory=_tolerance('decomposition_transport'))
	curvature: NonNegativeFloat = Field(default_factory=_tolerance('curvature'))
	antisymmetry: NonNegativeFloat = Field(default_factory=_tolerance('antisymmetry'))
	commutator: NonNegativeFloat = Field(default_factory=_tolerance('commutator'))
	loop_homotopy: NonNegativeFloat = Field(default_factory=_tolerance('loop_homotopy'))
	bianchi_analytic: NonNegativeFloat = Field(default_factory=_tolerance('bianchi_analytic'))
	bianchi_numeric: NonNegativeFloat = Field(default_factory=_tolerance('bianchi_numeric'))

	min_order: float = Field(default_factory=lambda: loopcalc_setting('MIN_ORDER'))
	max_order: float = Field(default_factory=lambda: loopcalc_setting('MAX_ORDER'))
	samples: dict[Identity, PositiveInt] = Field(
		default_factory=lambda: {Identity(k): v for k, v in loopcalc_setting('SAMPLES').items()}
	)

	@field_validator('samples')
	@classmethod
	def _all_counts(cls, value: dict[Identity, int]) -> dict[Identity, int]:
		defaults = {Identity(k): v for k, v in loopcalc_setting('SAMPLES').items()}
		return {**defaults, **value}

	def tolerance(self, identity: Identity) -> float:
		return getattr(self, identity.value)

	def sample_count(self, identity: Identity) -> int:
		return self.samples[identity]

	def with_trials(self, trials: int) -> "Tolerances":
		return self.model_copy(update={'samples': {i: trials for i in Identity}})


class IdentityRecord(BaseModel):
	model_config = ConfigDict(frozen=True)

	identity: Identity
	samples: int
	max_error: float
	mean_error: float
	# smallest finite observed order over the samples, nan when none was measurable
	observed_order: float = math.nan
	tolerance: float
	passed: bool


class VerificationReport(BaseModel):
	model_config = ConfigDict(frozen=True)

	records: list[IdentityRecord]

	@property
	def passed(self) -> bool:
		return all(record.passed for record in self.records)

	@property
	def total_samples(self) -> int:
		return sum(record.samples for record in self.records)

	@property
	def max_error(self) -> float:
		return max((r.max_error for r in self.records), default=0.0)

	@property
	def mean_error(self) -> float:
		# sample-weighted mean over every record
		total = self.total_samples
		if not total:
			return 0.0
		return sum(r.mean_error * r.samples for r in self.records) / total

	def record(self, identity: Identity) -> IdentityRecord | None:
		return next((r for r in self.records if r.identity is identity), None)
