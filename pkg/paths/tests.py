from django.test import SimpleTestCase

from loopcalc.sysutils.exceptions import DimMismatch, EndpointMismatch, LoopCalcError, ZeroDirection
from paths.models import Path
from paths.services import (
	compose,
	compose_all,
	constant,
	endpoint,
	inverse,
	is_loop,
	parallel_transport,
	parallelogram,
	polyline_probe,
	reduce,
	segment,
	subdivide,
	thin_equal,
)
from verify.models import RandomSpec
from verify.services import SplitMix64, random_path


def P(*points):
	return Path(points[0], tuple(points[1:]))


class PathAlgebraTests(SimpleTestCase):
	def test_endpoint_of_constant_and_polyline(self):
		self.assertEqual(endpoint(constant((0, 0))), (0.0, 0.0))
		self.assertEqual(endpoint(P((0, 0), (1, 0), (1, 1))), (1.0, 1.0))

	def test_compose_concatenates_without_reducing(self):
		p = P((0, 0), (1, 0))
		q = P((1, 0), (1, 1))
		self.assertEqual(compose(p, q), P((0, 0), (1, 0), (1, 1)))
		self.assertEqual(endpoint(compose(p, q)), endpoint(q))
		self.assertEqual(reduce(compose(p, constant((1, 0)))), reduce(p))

	def test_compose_rejects_gaps_and_dimension_changes(self):
		with self.assertRaises(EndpointMismatch):
			compose(P((0, 0), (1, 0)), P((2, 2), (3, 3)))
		with self.assertRaises(DimMismatch):
			compose(P((0, 0), (1, 0)), P((1, 0, 0), (1, 1, 0)))

	def test_inverse(self):
		p = P((0, 0), (1, 0), (1, 1))
		self.assertEqual(inverse(P((0, 0), (1, 0))), P((1, 0), (0, 0)))
		self.assertEqual(inverse(inverse(p)), p)
		self.assertEqual(reduce(compose(p, inverse(p))), constant((0, 0)))

	def test_reduce_removes_spur_and_merges_collinear(self):
		spur = P((0, 0), (1, 0), (1, 1), (1, 0), (2, 0))
		self.assertEqual(reduce(spur), P((0, 0), (2, 0)))
		self.assertTrue(thin_equal(spur, P((0, 0), (1, 0), (2, 0))))

	def test_reduce_partial_retrace(self):
		self.assertEqual(reduce(P((0, 0), (2, 0), (1, 0), (3, 0))), P((0, 0), (3, 0)))
		self.assertEqual(reduce(P((0, 0), (3, 0), (1, 0))), P((0, 0), (1, 0)))
		self.assertEqual(reduce(P((0, 0), (1, 0), (-2, 0))), P((0, 0), (-2, 0)))

	def test_reduce_drops_zero_segments(self):
		self.assertEqual(reduce(P((0, 0), (0, 0), (1, 1), (1, 1))), P((0, 0), (1, 1)))
		self.assertEqual(reduce(constant((3, 4))), constant((3, 4)))

	def test_reduce_is_idempotent(self):
		p = P((0, 0), (1, 0), (1, 1), (0, 1))
		self.assertEqual(reduce(p), p)
		self.assertEqual(reduce(reduce(p)), reduce(p))

	def test_thin_equal(self):
		p = P((0, 0), (1, 0), (1, 1))
		square = P((0, 0), (1, 0), (1, 1), (0, 1), (0, 0))
		self.assertTrue(thin_equal(p, compose_all(P((0, 0), (1, 0)), P((1, 0), (2, 3)), P((2, 3), (1, 0)), P((1, 0), (1, 1)))))
		self.assertFalse(thin_equal(p, inverse(p)))
		self.assertTrue(thin_equal(compose(square, inverse(square)), constant((0, 0))))
		with self.assertRaises(DimMismatch):
			thin_equal(p, constant((0, 0, 0)))

	def test_segment(self):
		x, y = (0.0, 1.0), (2.0, 3.0)
		self.assertEqual(segment(x, x), constant(x))
		self.assertEqual(endpoint(segment(x, y)), y)
		self.assertEqual(inverse(segment(x, y)), segment(y, x))
		with self.assertRaises(DimMismatch):
			segment(x, (1.0, 2.0, 3.0))

	def test_parallelogram(self):
		box = parallelogram((0, 0), (1, 0), (0, 1), 0.5, 0.5)
		self.assertEqual(box.vertices, ((0.5, 0.0), (0.5, 0.5), (0.0, 0.5), (0.0, 0.0)))
		self.assertTrue(is_loop(box))
		self.assertEqual(reduce(parallelogram((0, 0), (1, 0), (0, 1), 0.3, 0.0)), constant((0, 0)))
		self.assertTrue(thin_equal(
			parallelogram((0, 0), (1, 2), (3, -1), 0.1, 0.1),
			inverse(parallelogram((0, 0), (3, -1), (1, 2), 0.1, 0.1)),
		))
		with self.assertRaises(ZeroDirection):
			parallelogram((0, 0), (0, 0), (0, 1), 0.1, 0.1)

	def test_parallel_transport(self):
		alpha = P((0, 0), (1, 0))
		gamma = P((1, 0), (1, 1))
		self.assertEqual(parallel_transport(alpha, gamma), P((0, 0), (1, 0), (1, 1)))
		self.assertEqual(parallel_transport(alpha, constant((1, 0))), reduce(alpha))
		there = parallel_transport(alpha, gamma)
		self.assertTrue(thin_equal(parallel_transport(there, inverse(gamma)), alpha))
		with self.assertRaises(EndpointMismatch):
			parallel_transport(alpha, P((5, 5), (6, 6)))

	def test_subdivide_keeps_reduced_form(self):
		p = P((0, 0), (1, 0), (1, 2))
		fine = subdivide(p, 4)
		self.assertEqual(len(fine.vertices), 8)
		self.assertEqual(reduce(fine), reduce(p))
		with self.assertRaises(LoopCalcError):
			subdivide(p, 0)

	def test_polyline_probe_starts_along_direction(self):
		probe = polyline_probe((1, 1), (2, 0), 0.3, bend=(0, 1))
		self.assertEqual(probe.base, (1.0, 1.0))
		self.assertEqual(len(probe.vertices), 3)
		self.assertAlmostEqual(endpoint(probe)[0], 1.6)
		self.assertAlmostEqual(endpoint(probe)[1], 1.09)


class SeededLoopPropertyTests(SimpleTestCase):
	"""Group and reduction properties over 1000 seeded random loops."""

	origin = (0.0, 0.0)

	@classmethod
	def setUpClass(cls):
		super().setUpClass()
		spec = RandomSpec(seed=42, dim=2)
		rng = SplitMix64(spec.seed)
		cls.loops = [random_path(spec, True, base=cls.origin, rng=rng) for _ in range(1000)]
		cls.spurs = [random_path(spec, False, base=cls.origin, rng=rng) for _ in range(1000)]

	def test_reduce_idempotent_and_never_longer(self):
		for loop in self.loops:
			reduced = reduce(loop)
			self.assertEqual(reduce(reduced), reduced)
			self.assertLessEqual(len(reduced.vertices), len(loop.vertices))
			self.assertEqual(endpoint(reduced), endpoint(loop))

	def test_loop_times_inverse_is_constant(self):
		for loop in self.loops:
			self.assertEqual(reduce(compose(loop, inverse(loop))), constant(self.origin))

	def test_inserted_spur_keeps_thin_class(self):
		for loop, spur in zip(self.loops, self.spurs):
			cut = len(loop.vertices) // 2
			head = Path(loop.base, loop.vertices[:cut])
			tail = Path(endpoint(head), loop.vertices[cut:])
			moved = compose(segment(endpoint(head), self.origin), spur)
			with_spur = compose_all(head, moved, inverse(moved), tail)
			self.assertTrue(thin_equal(with_spur, loop))

	def test_group_axioms(self):
		for a, b, c in zip(self.loops, self.loops[1:], self.loops[2:]):
			self.assertTrue(thin_equal(compose(compose(a, b), c), compose(a, compose(b, c))))
			self.assertTrue(thin_equal(compose(constant(self.origin), a), a))

	def test_thin_equal_is_an_equivalence(self):
		sample = []
		for loop, spur in zip(self.loops[:10], self.spurs[:10]):
			sample.append(loop)
			sample.append(compose_all(loop, spur, inverse(spur)))
		for p in sample:
			self.assertTrue(thin_equal(p, p))
			for q in sample:
				self.assertEqual(thin_equal(p, q), thin_equal(q, p))
				if not thin_equal(p, q):
					continue
				for r in sample:
					if thin_equal(q, r):
						self.assertTrue(thin_equal(p, r))

	def test_transport_is_compatible_with_composition(self):
		for alpha, g1, g2 in zip(self.spurs[:50], self.spurs[50:100], self.spurs[100:150]):
			g1 = compose(segment(endpoint(alpha), self.origin), g1)
			g2 = compose(segment(endpoint(g1), self.origin), g2)
			stepwise = parallel_transport(parallel_transport(alpha, g1), g2)
			self.assertTrue(thin_equal(stepwise, parallel_transport(alpha, compose(g1, g2))))
