import cmath
import importlib
import math
import os
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from pydantic import ValidationError
from scipy.linalg import expm

from gauge.models import ConnectionField, IntegratorOptions
from gauge.services import (
	algebra_distance,
	check_group_element,
	eval_field,
	field_strength,
	holonomy,
	project_to_group,
	relative_error,
	su2_generator,
)
from loopcalc import settings as project_settings
from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import GroupTag
from loopcalc.sysutils.exceptions import (
	AlgebraInvariantError,
	DimMismatch,
	IndexOutOfRange,
	ShapeMismatch,
)
from paths.models import Path
from paths.services import compose, compose_all, constant, endpoint, inverse, subdivide
from verify.models import RandomSpec
from verify.services import SplitMix64, random_path, reference_field


def square(L):
	return Path((0.0, 0.0), ((L, 0.0), (L, L), (0.0, L), (0.0, 0.0)))


def constant_su2(*coefficients):
	'''Field with C_mu = c_mu * i sigma_mu and no slope.'''
	C = [c * su2_generator(k + 1) for k, c in enumerate(coefficients)]
	return ConnectionField.from_arrays(GroupTag.SU2, C)


class ConnectionFieldTests(SimpleTestCase):
	def test_zero_field_is_zero_everywhere(self):
		A = ConnectionField.zero(GroupTag.SU2, 3)
		np.testing.assert_array_equal(eval_field(A, (0.3, -1.0, 2.0), 2), np.zeros((2, 2)))
		np.testing.assert_array_equal(field_strength(A, (0.3, -1.0, 2.0), 1, 3), np.zeros((2, 2)))

	def test_symmetric_gauge_values(self):
		A = ConnectionField.uniform_abelian(1.0)
		self.assertAlmostEqual(complex(eval_field(A, (0.0, 1.0), 1)[0, 0]), -0.5j)
		self.assertAlmostEqual(complex(field_strength(A, (0.7, -0.2), 1, 2)[0, 0]), 1j)

	def test_constant_field_does_not_depend_on_position(self):
		A = constant_su2(0.3, 0.4)
		np.testing.assert_array_equal(eval_field(A, (0, 0), 1), eval_field(A, (5, -2), 1))

	def test_constant_field_strength_is_commutator(self):
		A = constant_su2(0.3, 0.4)
		np.testing.assert_allclose(field_strength(A, (0, 0), 1, 2), -0.24 * su2_generator(3), atol=1e-15)
		np.testing.assert_allclose(field_strength(A, (0, 0), 2, 1), 0.24 * su2_generator(3), atol=1e-15)

	def test_index_and_dimension_checks(self):
		A = ConnectionField.uniform_abelian(1.0)
		with self.assertRaises(IndexOutOfRange):
			eval_field(A, (0, 0), 3)
		with self.assertRaises(IndexOutOfRange):
			field_strength(A, (0, 0), 0, 1)
		with self.assertRaises(DimMismatch):
			eval_field(A, (0, 0, 0), 1)

	def test_algebra_invariants_checked_on_construction(self):
		with self.assertRaises(AlgebraInvariantError):
			ConnectionField.from_arrays(GroupTag.U1, [[[1.0]], [[0.0]]])
		with self.assertRaises(AlgebraInvariantError):
			ConnectionField.from_arrays(GroupTag.SU2, [1j * np.eye(2)])
		with self.assertRaises(AlgebraInvariantError):
			ConnectionField.from_arrays(GroupTag.SU2, [1e6 * su2_generator(1) + 1e-6 * np.array([[0.0, 1.0], [1.0, 0.0]])])
		with self.assertRaises(ShapeMismatch):
			ConnectionField.from_arrays(GroupTag.SU2, np.zeros((2, 3, 3)))
		gl = ConnectionField.from_arrays(GroupTag.GL, [np.ones((3, 3))])
		self.assertEqual(gl.size, 3)

	def test_arrays_are_read_only(self):
		A = reference_field("su2_affine")
		with self.assertRaises(ValueError):
			A.C[0, 0, 0] = 1.0


class AlgebraDistanceTests(SimpleTestCase):
	def test_distance(self):
		I = np.eye(2)
		self.assertEqual(algebra_distance(I, I), 0.0)
		self.assertAlmostEqual(algebra_distance(I, 2 * I), math.sqrt(2))
		with self.assertRaises(ShapeMismatch):
			algebra_distance(I, np.eye(3))

	def test_norm_properties_on_sampled_triples(self):
		rng = SplitMix64(7)
		for _ in range(20):
			X, Y, Z = (np.array([[rng.next_box() + 1j * rng.next_box() for _ in range(2)] for _ in range(2)]) for _ in range(3))
			self.assertAlmostEqual(algebra_distance(X, Y), algebra_distance(Y, X))
			self.assertLessEqual(algebra_distance(X, Z), algebra_distance(X, Y) + algebra_distance(Y, Z) + 1e-15)

	def test_relative_error_uses_unit_floor(self):
		self.assertAlmostEqual(relative_error(np.array([[1e-3]]), np.array([[0.0]])), 1e-3)
		self.assertAlmostEqual(relative_error(np.array([[11.0]]), np.array([[10.0]])), 0.1)


class HolonomyTests(SimpleTestCase):
	def test_zero_field_gives_identity(self):
		A = ConnectionField.zero(GroupTag.SU2, 2)
		W = holonomy(A, Path((0, 0), ((1, 0), (0.3, 2.0))))
		np.testing.assert_allclose(W, np.eye(2), atol=1e-14)

	def test_constant_path_gives_identity(self):
		W = holonomy(reference_field("su2_affine"), constant((0.1, 0.2, 0.3)))
		np.testing.assert_array_equal(W, np.eye(2))

	def test_step_count_is_not_read_from_environment(self):
		with mock.patch.dict(os.environ, {'LOOPCALC_INTEGRATOR_STEPS': '1'}):
			importlib.reload(project_settings)
		self.addCleanup(importlib.reload, project_settings)
		self.assertEqual(project_settings.LOOPCALC['INTEGRATOR_STEPS'], 64)
		self.assertEqual(IntegratorOptions().steps_per_segment, 64)

	def test_abelian_square_matches_flux(self):
		for B in (0.5, 1.0):
			A = ConnectionField.uniform_abelian(B)
			for L in (0.1, 0.5, 1.0):
				H = complex(holonomy(A, square(L), IntegratorOptions(steps_per_segment=64))[0, 0])
				self.assertLessEqual(abs(H - cmath.exp(1j * B * L * L)), 1e-8)

	def test_abelian_square_documented_value(self):
		H = complex(holonomy(ConnectionField.uniform_abelian(1.0), square(0.5))[0, 0])
		self.assertAlmostEqual(H.real, 0.96891242, places=8)
		self.assertAlmostEqual(H.imag, 0.24740396, places=8)

	def test_constant_su2_segment_is_exponential(self):
		A = constant_su2(0.3, 0.0)
		W = holonomy(A, Path((0, 0), ((1, 0),)))
		expected = math.cos(0.3) * np.eye(2) + 1j * math.sin(0.3) * np.array([[0, 1], [1, 0]])
		np.testing.assert_allclose(W, expected, atol=1e-12)
		np.testing.assert_allclose(W, expm(0.3 * su2_generator(1)), atol=1e-12)

	def test_ordering_multiplies_on_the_right(self):
		A = constant_su2(0.3, 0.4)
		p = Path((0, 0), ((1, 0), (1, 1)))
		expected = expm(0.3 * su2_generator(1)) @ expm(0.4 * su2_generator(2))
		np.testing.assert_allclose(holonomy(A, p), expected, atol=1e-12)

	def test_dimension_mismatch(self):
		with self.assertRaises(DimMismatch):
			holonomy(ConnectionField.uniform_abelian(1.0), Path((0, 0, 0), ((1, 0, 0),)))

	def test_integrator_order(self):
		A = ConnectionField.uniform_abelian(1.0)
		exact = cmath.exp(1j)

		def error(steps):
			H = complex(holonomy(A, square(1.0), IntegratorOptions(steps_per_segment=steps))[0, 0])
			return abs(H - exact)

		ratio = error(4) / error(8)
		self.assertGreaterEqual(ratio, 12.0)
		self.assertLessEqual(ratio, 20.0)

	def test_subdivision_barely_changes_holonomy(self):
		A = reference_field("su2_affine")
		p = Path((0, 0, 0), ((0.5, 0, 0), (0.5, 0.4, 0), (0.2, 0.4, 0.3)))
		self.assertLessEqual(algebra_distance(holonomy(A, subdivide(p, 2)), holonomy(A, p)), 1e-10)

	def test_reunitarized_output_stays_in_group(self):
		A = reference_field("su2_affine")
		spec = RandomSpec(seed=5, dim=3)
		W = holonomy(A, random_path(spec, False))
		self.assertTrue(check_group_element(W, GroupTag.SU2))
		with self.assertRaises(ValidationError):
			IntegratorOptions(steps_per_segment=0)

	def test_projection_onto_su2(self):
		U = expm(0.7 * su2_generator(2)) * 1.001
		projected = project_to_group(U[None], GroupTag.SU2)[0]
		self.assertTrue(check_group_element(projected, GroupTag.SU2))
		np.testing.assert_allclose(projected, U / 1.001, atol=1e-12)


class HolonomyPropertyTests(SimpleTestCase):
	"""Homomorphism, inverse and thin invariance on the su2 reference field."""

	@classmethod
	def setUpClass(cls):
		super().setUpClass()
		cls.A = reference_field("su2_affine")
		cls.tol = loopcalc_setting('TOLERANCES')['homomorphism']
		spec = RandomSpec(seed=42, dim=3)
		rng = SplitMix64(spec.seed)
		cls.pairs = []
		for _ in range(50):
			alpha = random_path(spec, False, rng=rng)
			cls.pairs.append((alpha, random_path(spec, False, base=endpoint(alpha), rng=rng)))

	def W(self, p):
		return holonomy(self.A, p)

	def test_homomorphism(self):
		for alpha, beta in self.pairs:
			self.assertLessEqual(algebra_distance(self.W(compose(alpha, beta)), self.W(alpha) @ self.W(beta)), self.tol)

	def test_inverse(self):
		for alpha, _ in self.pairs:
			self.assertLessEqual(algebra_distance(self.W(inverse(alpha)), np.linalg.inv(self.W(alpha))), self.tol)

	def test_thin_invariance(self):
		for alpha, beta in self.pairs:
			xi = Path(endpoint(alpha), tuple(reversed(beta.vertices)))
			spurred = compose_all(alpha, beta, inverse(beta), xi)
			self.assertLessEqual(algebra_distance(self.W(spurred), self.W(compose(alpha, xi))), self.tol)
