import math

import numpy as np
from django.test import SimpleTestCase
from pydantic import ValidationError

from calculus.models import FDScheme, PathFunctional, Section
from calculus.services import (
	arc_section,
	commutator_mandelstam,
	connection_derivative,
	constant_functional,
	decomposition_residual,
	endpoint_coordinate,
	holonomy_functional,
	loop_derivative,
	loop_homotopy_derivative,
	mandelstam_derivative,
	observed_order,
	richardson_table,
	section_derivative,
	transport_section,
	unit,
)
from gauge.models import ConnectionField
from gauge.services import eval_field, field_strength, relative_error, su2_generator
from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import GroupTag, Stencil
from loopcalc.sysutils.exceptions import (
	DependentDirections,
	EndpointMismatch,
	IndexOutOfRange,
	RadiusExceeded,
	ShapeMismatch,
	ZeroDirection,
)
from paths.models import Path
from paths.services import constant, endpoint, polyline_probe, segment
from verify.models import RandomSpec
from verify.services import SplitMix64, random_path, reference_field


TOLERANCES = loopcalc_setting('TOLERANCES')
MIN_ORDER = loopcalc_setting('MIN_ORDER')
MAX_ORDER = loopcalc_setting('MAX_ORDER')


def sampled_paths(count, dim=3, seed=42, closed=False):
	spec = RandomSpec(seed=seed, dim=dim)
	rng = SplitMix64(seed)
	return [random_path(spec, closed, rng=rng) for _ in range(count)]


def order_ok(order, high=math.inf):
	return math.isnan(order) or MIN_ORDER <= order <= high


class FiniteDifferenceTests(SimpleTestCase):
	def test_richardson_removes_quadratic_error(self):
		eps = [1e-2, 5e-3, 2.5e-3]
		values = [np.array([[1.0 + 3.0 * e * e]]) for e in eps]
		table = richardson_table(values, eps, 2)
		self.assertAlmostEqual(float(table[-1][-1][0, 0]), 1.0, places=14)
		self.assertAlmostEqual(float(table[1][1][0, 0]), 1.0, places=14)

	def test_observed_order_of_quadratic_error(self):
		eps = [1e-2, 5e-3, 2.5e-3]
		raw = [np.array([[e * e]]) for e in eps]
		self.assertAlmostEqual(observed_order(raw, eps, 0.0), 2.0, places=10)
		self.assertTrue(math.isnan(observed_order(raw, eps, 1.0)))
		self.assertTrue(math.isnan(observed_order(raw[:2], eps[:2], 0.0)))

	def test_observed_order_with_uneven_steps(self):
		eps = [1e-2, 5e-3, 1e-3]
		quadratic = [np.array([[1.0 + 3.0 * e * e]]) for e in eps]
		linear = [np.array([[2.0 - 0.5 * e]]) for e in eps]
		self.assertAlmostEqual(observed_order(quadratic, eps, 0.0), 2.0, places=8)
		self.assertAlmostEqual(observed_order(linear, eps, 0.0), 1.0, places=8)

	def test_scheme_validation(self):
		self.assertEqual(FDScheme().eps_list, tuple(loopcalc_setting('EPS_LIST')))
		with self.assertRaises(ValidationError):
			FDScheme(eps_list=(1e-3, 1e-2))
		with self.assertRaises(ValidationError):
			FDScheme(eps_list=(1e-2,))
		with self.assertRaises(ValidationError):
			FDScheme(eps_list=(1e-2, -1e-3))
		self.assertEqual(FDScheme(stencil=Stencil.FORWARD).error_power, 1)

	def test_functional_shape_is_checked(self):
		f = PathFunctional(lambda p: np.zeros((2, 2)), (1, 1), name="bad")
		with self.assertRaises(ShapeMismatch):
			f(constant((0, 0)))


class MandelstamDerivativeTests(SimpleTestCase):
	@classmethod
	def setUpClass(cls):
		super().setUpClass()
		cls.A = reference_field("su2_affine")
		cls.W = holonomy_functional(cls.A)
		cls.paths = sampled_paths(6)

	def test_constant_functional(self):
		f = constant_functional(np.eye(2))
		result = mandelstam_derivative(f, self.paths[0], (1.0, 0.0, 0.0))
		np.testing.assert_array_equal(result.value, np.zeros((2, 2)))
		self.assertLessEqual(result.est_error, 1e-12)

	def test_endpoint_coordinate(self):
		pi = self.paths[0]
		for mu in (1, 2, 3):
			for nu in (1, 2, 3):
				result = mandelstam_derivative(endpoint_coordinate(nu, 3), pi, unit(3, mu))
				self.assertAlmostEqual(complex(result.value[0, 0]), 1.0 if mu == nu else 0.0, places=9)

	def test_holonomy_derivative_is_right_multiplication(self):
		for k, pi in enumerate(self.paths):
			mu = k % 3 + 1
			result = mandelstam_derivative(self.W, pi, unit(3, mu))
			oracle = self.W(pi) @ eval_field(self.A, endpoint(pi), mu)
			self.assertLessEqual(relative_error(result.value, oracle), TOLERANCES['mandelstam'])
			self.assertTrue(order_ok(result.est_order, MAX_ORDER), result.est_order)

	def test_linear_in_direction(self):
		pi = self.paths[1]
		u, v = (0.3, -0.2, 0.5), (-0.1, 0.4, 0.2)
		combined = mandelstam_derivative(self.W, pi, tuple(2.0 * a - 3.0 * b for a, b in zip(u, v))).value
		separate = 2.0 * mandelstam_derivative(self.W, pi, u).value - 3.0 * mandelstam_derivative(self.W, pi, v).value
		self.assertLessEqual(relative_error(combined, separate), 1e-8)

	def test_curved_probe_gives_same_derivative(self):
		pi = self.paths[2]
		v = (0.5, 0.2, -0.4)
		straight = mandelstam_derivative(self.W, pi, v)
		curved = mandelstam_derivative(
			self.W, pi, v, probe=lambda x, d, eps: polyline_probe(x, d, eps, bend=(1.0, -2.0, 0.5)),
		)
		difference = float(np.linalg.norm(straight.value - curved.value))
		self.assertLessEqual(difference, max(10.0 * (straight.est_error + curved.est_error), 1e-10))

	def test_forward_stencil(self):
		pi = self.paths[3]
		scheme = FDScheme(stencil=Stencil.FORWARD, eps_list=(1e-3, 5e-4, 2.5e-4))
		result = mandelstam_derivative(self.W, pi, unit(3, 2), scheme)
		oracle = self.W(pi) @ eval_field(self.A, endpoint(pi), 2)
		self.assertLessEqual(relative_error(result.value, oracle), 1e-6)
		self.assertGreater(result.est_order, 0.8)
		self.assertLess(result.est_order, 1.2)

	def test_uneven_step_sizes_keep_second_order(self):
		scheme = FDScheme(eps_list=(1e-2, 5e-3, 1e-3))
		pi = self.paths[4]
		result = mandelstam_derivative(self.W, pi, unit(3, 1), scheme)
		oracle = self.W(pi) @ eval_field(self.A, endpoint(pi), 1)
		self.assertLessEqual(relative_error(result.value, oracle), TOLERANCES['mandelstam'])
		self.assertGreaterEqual(result.est_order, MIN_ORDER)
		self.assertLessEqual(result.est_order, MAX_ORDER)

	def test_zero_direction(self):
		with self.assertRaises(ZeroDirection):
			mandelstam_derivative(self.W, self.paths[0], (0.0, 0.0, 0.0))


class SectionDerivativeTests(SimpleTestCase):
	@classmethod
	def setUpClass(cls):
		super().setUpClass()
		cls.A = reference_field("su2_affine")
		cls.W = holonomy_functional(cls.A)
		cls.paths = sampled_paths(4, seed=7)

	def arc(self, pi):
		x = np.asarray(endpoint(pi))
		return arc_section(pi.base, tuple(x - 0.5), tuple(x))

	def test_straight_ray_section_moves_endpoint(self):
		origin = (0.0, 0.0, 0.0)
		ray = Section(center=(0.3, 0.1, -0.2), evaluate=lambda y: segment(origin, y), radius=1.0)
		for mu in (1, 2, 3):
			for nu in (1, 2, 3):
				result = section_derivative(endpoint_coordinate(nu, 3), ray, unit(3, mu))
				self.assertAlmostEqual(complex(result.value[0, 0]), 1.0 if mu == nu else 0.0, places=9)

	def test_constant_functional(self):
		S = self.arc(self.paths[0])
		f = constant_functional(2.0)
		self.assertEqual(float(np.linalg.norm(section_derivative(f, S, (1, 0, 0)).value)), 0.0)
		self.assertEqual(float(np.linalg.norm(connection_derivative(f, S, 2).value)), 0.0)

	def test_arc_section_reaches_its_points(self):
		pi = self.paths[1]
		S = self.arc(pi)
		self.assertEqual(endpoint(S.center_path()), endpoint(pi))
		y = tuple(c + 0.01 for c in endpoint(pi))
		self.assertEqual(endpoint(S(y)), y)
		self.assertEqual(S(y).base, pi.base)

	def test_radius_is_enforced(self):
		pi = self.paths[0]
		x = endpoint(pi)
		S = arc_section(pi.base, tuple(c - 0.5 for c in x), x, radius=1e-3)
		with self.assertRaises(RadiusExceeded):
			section_derivative(self.W, S, unit(3, 1))
		with self.assertRaises(RadiusExceeded):
			connection_derivative(self.W, S, 1)

	def test_transport_section_has_no_vertical_part(self):
		for pi in self.paths:
			for mu in (1, 2, 3):
				result = connection_derivative(self.W, transport_section(pi), mu)
				self.assertLessEqual(float(np.linalg.norm(result.value)), TOLERANCES['decomposition_transport'])

	def test_arc_vertical_part_matches_subtraction(self):
		for pi in self.paths:
			S = self.arc(pi)
			x = endpoint(pi)
			for mu in (1, 2, 3):
				vertical = connection_derivative(self.W, S, mu)
				total = section_derivative(self.W, S, unit(3, mu))
				oracle = total.value - self.W(S.center_path()) @ eval_field(self.A, x, mu)
				self.assertLessEqual(float(np.linalg.norm(vertical.value - oracle)), 1e-6)

	def test_arc_vertical_part_is_not_zero(self):
		S = self.arc(self.paths[2])
		self.assertGreater(float(np.linalg.norm(connection_derivative(self.W, S, 1).value)), 1e-4)

	def test_decomposition(self):
		rng = SplitMix64(11)
		for pi in self.paths:
			v = rng.next_point(3)
			for S in (self.arc(pi), transport_section(pi)):
				residual, est_error = decomposition_residual(self.W, S, v)
				self.assertLessEqual(residual, max(TOLERANCES['decomposition'], 10.0 * est_error))


class LoopDerivativeTests(SimpleTestCase):
	@classmethod
	def setUpClass(cls):
		super().setUpClass()
		cls.A = reference_field("su2_affine")
		cls.W = holonomy_functional(cls.A)
		spec = RandomSpec(seed=3, dim=3)
		rng = SplitMix64(spec.seed)
		cls.samples = []
		for _ in range(4):
			pi = random_path(spec, False, rng=rng)
			cls.samples.append((pi, random_path(spec, True, base=pi.base, rng=rng)))

	def test_zero_field(self):
		W = holonomy_functional(ConnectionField.zero(GroupTag.SU2, 3))
		pi, gamma = self.samples[0]
		result = loop_derivative(W, pi, gamma, unit(3, 1), unit(3, 2))
		self.assertLessEqual(float(np.linalg.norm(result.value)), 1e-10)

	def test_uniform_abelian_field_strength(self):
		W = holonomy_functional(ConnectionField.uniform_abelian(1.0))
		origin = constant((0.0, 0.0))
		result = loop_derivative(W, origin, origin, unit(2, 1), unit(2, 2))
		self.assertAlmostEqual(complex(result.value[0, 0]), 1j, places=6)

	def test_constant_su2_field_is_conjugated_curvature(self):
		A = ConnectionField.from_arrays(GroupTag.SU2, [0.3 * su2_generator(1), 0.4 * su2_generator(2), 0.2 * su2_generator(3)])
		W = holonomy_functional(A)
		for pi, gamma in self.samples:
			result = loop_derivative(W, pi, gamma, unit(3, 1), unit(3, 2))
			transport = W(pi)
			oracle = transport @ field_strength(A, endpoint(pi), 1, 2) @ np.linalg.inv(transport) @ W(gamma)
			self.assertLessEqual(relative_error(result.value, oracle), TOLERANCES['curvature'])

	def test_affine_field_curvature_identity(self):
		for k, (pi, gamma) in enumerate(self.samples):
			mu, nu = [(1, 2), (1, 3), (2, 3)][k % 3]
			result = loop_derivative(self.W, pi, gamma, unit(3, mu), unit(3, nu))
			transport = self.W(pi)
			oracle = transport @ field_strength(self.A, endpoint(pi), mu, nu) @ np.linalg.inv(transport) @ self.W(gamma)
			self.assertLessEqual(relative_error(result.value, oracle), TOLERANCES['curvature'])
			self.assertTrue(order_ok(result.est_order), result.est_order)

	def test_uneven_step_sizes(self):
		pi, gamma = self.samples[2]
		scheme = FDScheme(eps_list=(1e-2, 5e-3, 1e-3))
		result = loop_derivative(self.W, pi, gamma, unit(3, 1), unit(3, 2), scheme)
		transport = self.W(pi)
		oracle = transport @ field_strength(self.A, endpoint(pi), 1, 2) @ np.linalg.inv(transport) @ self.W(gamma)
		self.assertLessEqual(relative_error(result.value, oracle), TOLERANCES['curvature'])
		self.assertTrue(order_ok(result.est_order), result.est_order)

	def test_open_continuation_path_is_accepted(self):
		A = ConnectionField.from_arrays(GroupTag.SU2, [0.3 * su2_generator(1), 0.4 * su2_generator(2), 0.2 * su2_generator(3)])
		W = holonomy_functional(A)
		pi = self.samples[0][0]
		result = loop_derivative(W, pi, pi, unit(3, 2), unit(3, 3))
		transport = W(pi)
		oracle = transport @ field_strength(A, endpoint(pi), 2, 3) @ np.linalg.inv(transport) @ transport
		self.assertLessEqual(relative_error(result.value, oracle), TOLERANCES['curvature'])

	def test_antisymmetry(self):
		pi, gamma = self.samples[1]
		u, v = (0.2, 1.0, -0.3), (0.7, 0.1, 0.4)
		forward = loop_derivative(self.W, pi, gamma, u, v)
		backward = loop_derivative(self.W, pi, gamma, v, u)
		allowed = max(TOLERANCES['antisymmetry'], forward.est_error + backward.est_error)
		self.assertLessEqual(float(np.linalg.norm(forward.value + backward.value)), allowed)

	def test_bad_directions_and_loops(self):
		pi, gamma = self.samples[0]
		with self.assertRaises(DependentDirections):
			loop_derivative(self.W, pi, gamma, (1, 2, 0), (-2, -4, 0))
		with self.assertRaises(ZeroDirection):
			loop_derivative(self.W, pi, gamma, (0, 0, 0), (0, 1, 0))
		with self.assertRaises(EndpointMismatch):
			loop_derivative(self.W, pi, constant(endpoint(pi)), unit(3, 1), unit(3, 2))

	def test_loop_homotopy_derivative_vanishes(self):
		for pi, gamma in self.samples:
			result = loop_homotopy_derivative(self.W, pi, gamma, unit(3, 1), unit(3, 3))
			self.assertLessEqual(float(np.linalg.norm(result.value)), TOLERANCES['loop_homotopy'])


class CommutatorTests(SimpleTestCase):
	def test_zero_field(self):
		W = holonomy_functional(ConnectionField.zero(GroupTag.SU2, 2))
		result = commutator_mandelstam(W, Path((0.1, 0.2), ((0.5, -0.3),)), 1, 2)
		self.assertLessEqual(float(np.linalg.norm(result.value)), 1e-9)

	def test_matches_loop_derivative(self):
		for A in (ConnectionField.uniform_abelian(1.0), reference_field("su2_affine")):
			W = holonomy_functional(A)
			for k, pi in enumerate(sampled_paths(2, dim=A.dim, seed=19)):
				mu, nu = (1, 2) if k == 0 or A.dim == 2 else (2, 3)
				nested = commutator_mandelstam(W, pi, mu, nu)
				oracle = loop_derivative(W, pi, pi, unit(A.dim, mu), unit(A.dim, nu))
				self.assertLessEqual(relative_error(nested.value, oracle.value), TOLERANCES['commutator'])

	def test_abelian_commutator_is_flux_times_holonomy(self):
		A = ConnectionField.uniform_abelian(1.0)
		W = holonomy_functional(A)
		pi = sampled_paths(1, dim=2, seed=23)[0]
		nested = commutator_mandelstam(W, pi, 1, 2)
		self.assertLessEqual(relative_error(nested.value, 1j * W(pi)), TOLERANCES['commutator'])

	def test_distinct_indices_required(self):
		W = holonomy_functional(ConnectionField.uniform_abelian(1.0))
		with self.assertRaises(IndexOutOfRange):
			commutator_mandelstam(W, constant((0, 0)), 1, 1)
		with self.assertRaises(IndexOutOfRange):
			commutator_mandelstam(W, constant((0, 0)), 1, 3)
