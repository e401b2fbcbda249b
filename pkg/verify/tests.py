import math

import numpy as np
from django.test import SimpleTestCase
from pydantic import ValidationError

from gauge.models import ConnectionField
from gauge.services import commutator, eval_field, field_strength, su2_generator
from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import BIANCHI_IDENTITIES, GroupTag, Identity
from loopcalc.sysutils.exceptions import DimMismatch, DimTooSmall, IndexOutOfRange
from paths.models import Path
from paths.services import endpoint
from verify.models import RandomSpec, Tolerances
from verify.services import (
	SplitMix64,
	bianchi_analytic,
	bianchi_numeric,
	random_field,
	random_path,
	reference_field,
	run_identity_suite,
)


class SplitMix64Tests(SimpleTestCase):
	def test_reference_output(self):
		rng = SplitMix64(0)
		self.assertEqual(rng.next_u64(), 0xE220A8397B1DCDAF)
		self.assertEqual(rng.next_u64(), 0x6E789E6AA1B965F4)

	def test_unit_interval(self):
		rng = SplitMix64(99)
		for _ in range(1000):
			u = rng.next_unit()
			self.assertGreaterEqual(u, 0.0)
			self.assertLess(u, 1.0)


class RandomSamplingTests(SimpleTestCase):
	def test_same_seed_same_path(self):
		spec = RandomSpec(seed=42, dim=3)
		self.assertEqual(random_path(spec, False), random_path(spec, False))
		self.assertNotEqual(random_path(spec, False), random_path(RandomSpec(seed=43, dim=3), False))

	def test_closed_paths_end_at_base(self):
		rng = SplitMix64(1)
		spec = RandomSpec(seed=1, dim=2)
		for _ in range(50):
			loop = random_path(spec, True, rng=rng)
			self.assertEqual(endpoint(loop), loop.base)

	def test_vertices_inside_box(self):
		rng = SplitMix64(2)
		spec = RandomSpec(seed=2, dim=4)
		for _ in range(50):
			p = random_path(spec, False, rng=rng)
			self.assertGreaterEqual(len(p.vertices), 3)
			self.assertLessEqual(len(p.vertices), 12)
			self.assertTrue(np.all(np.abs(p.points()) <= 1.0))

	def test_fixed_base(self):
		p = random_path(RandomSpec(seed=4, dim=2), False, base=(0.25, -0.5))
		self.assertEqual(p.base, (0.25, -0.5))

	def test_spec_validation(self):
		with self.assertRaises(ValidationError):
			RandomSpec(seed=-1, dim=2)
		with self.assertRaises(ValidationError):
			RandomSpec(seed=1, dim=2, min_vertices=5, max_vertices=4)

	def test_random_fields_are_deterministic_and_valid(self):
		spec = RandomSpec(seed=8, dim=3)
		for group in (GroupTag.U1, GroupTag.SU2):
			a, b = random_field(spec, group), random_field(spec, group)
			np.testing.assert_array_equal(a.C, b.C)
			np.testing.assert_array_equal(a.D, b.D)
		self.assertEqual(random_field(spec, GroupTag.GL, 3).size, 3)

	def test_reference_fields(self):
		self.assertEqual(reference_field("zero").dim, 3)
		self.assertEqual(reference_field("u1_uniform").group, GroupTag.U1)
		self.assertEqual(reference_field("su2_affine").size, 2)


class BianchiTests(SimpleTestCase):
	tol = loopcalc_setting('TOLERANCES')['bianchi_analytic']

	def test_zero_field(self):
		A = ConnectionField.zero(GroupTag.SU2, 3)
		self.assertEqual(bianchi_analytic(A, (0.1, 0.2, 0.3), 1, 2, 3), 0.0)
		self.assertLessEqual(bianchi_numeric(A, Path((0, 0, 0), ((0.3, 0.1, 0),)), 1, 2, 3), 1e-10)

	def test_constant_field_is_jacobi(self):
		C = [0.3 * su2_generator(1), 0.4 * su2_generator(2) + 0.1 * su2_generator(3), 0.2 * su2_generator(3)]
		A = ConnectionField.from_arrays(GroupTag.SU2, C)
		self.assertLessEqual(bianchi_analytic(A, (0.5, -0.5, 0.1), 1, 2, 3), self.tol)

	def test_random_affine_fields(self):
		rng = SplitMix64(42)
		for k in range(100):
			A = random_field(RandomSpec(seed=rng.next_u64(), dim=3), GroupTag.SU2)
			x = rng.next_point(3)
			self.assertLessEqual(bianchi_analytic(A, x, 1, 2, 3), self.tol, k)

	def test_gl_fields_in_four_dimensions(self):
		rng = SplitMix64(5)
		for _ in range(10):
			A = random_field(RandomSpec(seed=rng.next_u64(), dim=4), GroupTag.GL, 2)
			x = rng.next_point(4)
			self.assertLessEqual(bianchi_analytic(A, x, 1, 3, 4), 1e-12)

	def test_analytic_derivative_agrees_with_differenced_field_strength(self):
		A = reference_field("su2_affine")
		x = np.array([0.2, -0.4, 0.7])
		h = 1e-3
		total = np.zeros((2, 2), dtype=complex)
		for mu, nu, xi in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
			step = h * np.eye(3)[mu - 1]
			d_strength = (field_strength(A, x + step, nu, xi) - field_strength(A, x - step, nu, xi)) / (2 * h)
			total += d_strength + commutator(eval_field(A, x, mu), field_strength(A, x, nu, xi))
		self.assertLessEqual(float(np.linalg.norm(total)), 1e-9)
		self.assertLessEqual(bianchi_analytic(A, x, 1, 2, 3), self.tol)

	def test_index_checks(self):
		with self.assertRaises(DimTooSmall):
			bianchi_analytic(ConnectionField.uniform_abelian(1.0), (0, 0), 1, 2, 1)
		with self.assertRaises(IndexOutOfRange):
			bianchi_analytic(reference_field("su2_affine"), (0, 0, 0), 1, 2, 2)
		with self.assertRaises(IndexOutOfRange):
			bianchi_analytic(reference_field("su2_affine"), (0, 0, 0), 1, 2, 4)

	def test_numeric_abelian_terms_vanish(self):
		A = ConnectionField.uniform_abelian(1.0, dim=3)
		pi = random_path(RandomSpec(seed=12, dim=3), False)
		self.assertLessEqual(bianchi_numeric(A, pi, 1, 2, 3), 1e-6)

	def test_numeric_affine_su2(self):
		A = reference_field("su2_affine")
		pi = random_path(RandomSpec(seed=13, dim=3), False)
		self.assertLessEqual(bianchi_numeric(A, pi, 1, 2, 3), loopcalc_setting('TOLERANCES')['bianchi_numeric'])


class ToleranceTests(SimpleTestCase):
	def test_defaults_come_from_settings(self):
		t = Tolerances()
		self.assertEqual(t.curvature, loopcalc_setting('TOLERANCES')['curvature'])
		self.assertEqual(t.sample_count(Identity.COMMUTATOR), loopcalc_setting('SAMPLES')['commutator'])

	def test_partial_samples_are_completed(self):
		t = Tolerances.model_validate({'curvature': 1e-3, 'samples': {'curvature': 5}})
		self.assertEqual(t.sample_count(Identity.CURVATURE), 5)
		self.assertEqual(t.sample_count(Identity.INVERSE), loopcalc_setting('SAMPLES')['inverse'])

	def test_unknown_identity_rejected(self):
		with self.assertRaises(ValidationError):
			Tolerances.model_validate({'curvatur': 1e-3})
		with self.assertRaises(ValidationError):
			Tolerances(curvature=-1.0)

	def test_with_trials(self):
		t = Tolerances().with_trials(3)
		self.assertTrue(all(t.sample_count(i) == 3 for i in Identity))


class IdentitySuiteTests(SimpleTestCase):
	def test_zero_field_passes_everything(self):
		A = reference_field("zero")
		report = run_identity_suite(A, RandomSpec(seed=1, dim=3), tolerances=Tolerances().with_trials(2))
		self.assertTrue(report.passed)
		self.assertEqual([r.identity for r in report.records], list(Identity))
		self.assertLessEqual(report.max_error, 1e-10)

	def test_two_dimensional_field_skips_bianchi(self):
		A = reference_field("u1_uniform")
		with self.assertLogs('verify', level='WARNING'):
			report = run_identity_suite(A, RandomSpec(seed=42, dim=2), tolerances=Tolerances().with_trials(3))
		identities = [r.identity for r in report.records]
		for identity in BIANCHI_IDENTITIES:
			self.assertNotIn(identity, identities)
		self.assertTrue(report.record(Identity.CURVATURE).passed)
		self.assertTrue(report.passed)

	def test_su2_reference_field_passes_at_defaults(self):
		A = reference_field("su2_affine")
		report = run_identity_suite(A, RandomSpec(seed=42, dim=3))
		failed = [r.identity.value for r in report.records if not r.passed]
		self.assertEqual(failed, [])
		self.assertEqual(report.record(Identity.MANDELSTAM).samples, loopcalc_setting('SAMPLES')['mandelstam'])
		order = report.record(Identity.CURVATURE).observed_order
		self.assertTrue(math.isnan(order) or order >= loopcalc_setting('MIN_ORDER'))

	def test_report_does_not_depend_on_worker_count(self):
		A = reference_field("su2_affine")
		spec = RandomSpec(seed=9, dim=3)
		tolerances = Tolerances().with_trials(2)
		serial = run_identity_suite(A, spec, tolerances=tolerances, workers=1)
		pooled = run_identity_suite(A, spec, tolerances=tolerances, workers=4)
		# repr keeps nan orders comparable
		self.assertEqual(repr(serial.model_dump()), repr(pooled.model_dump()))

	def test_zero_tolerance_fails(self):
		A = reference_field("su2_affine")
		tolerances = Tolerances(curvature=0.0).with_trials(2)
		report = run_identity_suite(A, RandomSpec(seed=42, dim=3), tolerances=tolerances)
		self.assertFalse(report.record(Identity.CURVATURE).passed)
		self.assertFalse(report.passed)

	def test_dimension_checks(self):
		A = ConnectionField.zero(GroupTag.U1, 1)
		with self.assertRaises(DimTooSmall):
			run_identity_suite(A, RandomSpec(seed=1, dim=1))
		with self.assertRaises(DimMismatch):
			run_identity_suite(reference_field("su2_affine"), RandomSpec(seed=1, dim=2))
