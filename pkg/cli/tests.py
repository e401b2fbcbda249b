import cmath
import tempfile
from io import StringIO
from pathlib import Path as FilePath

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from cli.serializers import (
	REPORT_HEADER,
	format_matrix,
	parse_field,
	parse_path,
	read_field_file,
	write_field,
	write_path,
	write_report,
)
from loopcalc.sysutils.config import loopcalc_setting
from loopcalc.sysutils.constants import REFERENCE_FIELDS, GroupTag, Identity
from loopcalc.sysutils.exceptions import AlgebraInvariantError, ParseError
from paths.models import Path
from verify.models import IdentityRecord, RandomSpec, VerificationReport
from verify.services import SplitMix64, random_field, random_path, reference_field

DATA_DIR = loopcalc_setting('DATA_DIR')


def field_file(name):
	return str(DATA_DIR / 'fields' / f'{name}.field')


def path_file(name):
	return str(DATA_DIR / 'paths' / f'{name}.path')


def parse_matrix(text):
	return np.array([[complex(token.replace('i', 'j')) for token in line.split()] for line in text.strip().splitlines()])


class CommandTestCase(SimpleTestCase):
	def setUp(self):
		self.tmp = tempfile.TemporaryDirectory()
		self.addCleanup(self.tmp.cleanup)

	def write(self, name, text):
		target = FilePath(self.tmp.name) / name
		target.write_text(text, encoding='utf-8')
		return str(target)

	def write_bytes(self, name, data):
		target = FilePath(self.tmp.name) / name
		target.write_bytes(data)
		return str(target)

	def run_command(self, *args, **options):
		out, err = StringIO(), StringIO()
		call_command(*args, stdout=out, stderr=err, **options)
		return out.getvalue()

	def assertExitCode(self, code, *args, **options):
		with self.assertRaises(CommandError) as ctx:
			self.run_command(*args, **options)
		self.assertEqual(ctx.exception.returncode, code, str(ctx.exception))
		return ctx.exception


class PathFileTests(SimpleTestCase):
	def test_parse_with_comments(self):
		p = parse_path("# a comment\ndim 2\n\nbase 0 0\nv 1e0 0.5\n")
		self.assertEqual(p, Path((0.0, 0.0), ((1.0, 0.5),)))

	def test_round_trip_is_exact(self):
		rng = SplitMix64(42)
		spec = RandomSpec(seed=42, dim=3)
		for _ in range(50):
			p = random_path(spec, False, rng=rng)
			parsed = parse_path(write_path(p))
			self.assertEqual(parsed, p)
			self.assertEqual(parse_path(write_path(parsed)), parsed)

	def test_malformed_files(self):
		for text in (
			"dim two\nbase 0 0\n",
			"base 0 0\n",
			"dim 2\nv 1 1\n",
			"dim 2\nbase 0 0 0\n",
			"dim 2\nbase 0 nan\n",
			"dim 2\ndim 2\nbase 0 0\n",
			"dim 2\nbase 0 0\nw 1 1\n",
			"",
		):
			with self.assertRaises(ParseError, msg=text):
				parse_path(text)


class FieldFileTests(SimpleTestCase):
	def test_shipped_fields_match_reference_fields(self):
		for name in REFERENCE_FIELDS:
			shipped = read_field_file(field_file(name))
			reference = reference_field(name)
			self.assertEqual(shipped.group, reference.group)
			np.testing.assert_array_equal(shipped.C, reference.C)
			np.testing.assert_array_equal(shipped.D, reference.D)

	def test_write_then_parse_is_exact(self):
		rng = SplitMix64(3)
		for group, d in ((GroupTag.U1, None), (GroupTag.SU2, None), (GroupTag.GL, 2)):
			A = random_field(RandomSpec(seed=rng.next_u64(), dim=3), group, d)
			B = parse_field(write_field(A))
			np.testing.assert_array_equal(A.C, B.C)
			np.testing.assert_array_equal(A.D, B.D)

	def test_duplicates_are_errors(self):
		with self.assertRaises(ParseError):
			parse_field("group u1\ndim 2\nC 1 0 1\nC 1 0 2\n")
		with self.assertRaises(ParseError):
			parse_field("group u1\ndim 2\nD 1 2 0 1\nD 1 2 0 1\n")

	def test_invariants_checked_on_load(self):
		with self.assertRaises(AlgebraInvariantError):
			parse_field("group u1 1\ndim 1\nC 1 1 0\n")
		with self.assertRaises(AlgebraInvariantError):
			parse_field("group su2 2\ndim 1\nC 1 0 1 0 0 0 0 0 1\n")

	def test_algebra_tolerance_does_not_grow_with_entry_size(self):
		with self.assertRaises(AlgebraInvariantError):
			parse_field("group u1 1\ndim 1\nC 1 1e-5 1000000\n")
		A = parse_field("group u1 1\ndim 1\nC 1 1e-11 1000000\n")
		self.assertEqual(A.C[0, 0, 0], complex(1e-11, 1e6))

	def test_malformed_files(self):
		for text in (
			"group su3\ndim 2\n",
			"group su2 3\ndim 2\n",
			"group gl\ndim 2\n",
			"dim 2\nC 1 0 1\n",
			"group u1\ndim 2\nC 3 0 1\n",
			"group u1\ndim 2\nC 1 0\n",
			"group u1\n",
		):
			with self.assertRaises(ParseError, msg=text):
				parse_field(text)


class FormatTests(SimpleTestCase):
	def test_matrix_entries(self):
		self.assertEqual(format_matrix(np.array([[complex(1, 0), complex(0, -0.5)]])), "1+0i 0-0.5i\n")
		M = np.array([[complex(0.1, 1 / 3), 2.0], [complex(1e-20, -3), -7.25]])
		np.testing.assert_array_equal(parse_matrix(format_matrix(M)), M)

	def test_report_layout(self):
		report = VerificationReport(records=[
			IdentityRecord(identity=Identity.INVERSE, samples=2, max_error=1.23456789e-10, mean_error=1e-11,
			               observed_order=float('nan'), tolerance=1e-9, passed=True),
			IdentityRecord(identity=Identity.CURVATURE, samples=3, max_error=2e-3, mean_error=1e-3,
			               observed_order=2.0000001, tolerance=1e-4, passed=False),
		])
		lines = write_report(report).splitlines()
		self.assertEqual(lines[0], ",".join(REPORT_HEADER))
		self.assertEqual(lines[1], "inverse,2,1.23457e-10,1e-11,nan,1e-09,true")
		self.assertEqual(lines[2], "curvature,3,0.002,0.001,2,0.0001,false")
		self.assertEqual(lines[3], "ALL,5,0.002,0.0006,nan,nan,false")


class ReduceCommandTests(CommandTestCase):
	def test_spur_is_removed(self):
		out = self.run_command('reduce', path_file('spur'))
		self.assertEqual(out, "dim 2\nbase 0 0\nv 2 0\n")

	def test_partial_retrace(self):
		self.assertEqual(parse_path(self.run_command('reduce', path_file('partial_retrace'))), Path((0, 0), ((3, 0),)))

	def test_constant_path(self):
		self.assertEqual(self.run_command('reduce', path_file('origin')), "dim 2\nbase 0 0\n")

	def test_malformed_dim(self):
		self.assertExitCode(2, 'reduce', self.write('bad.path', "dim x\nbase 0 0\n"))

	def test_missing_file(self):
		self.assertExitCode(2, 'reduce', str(FilePath(self.tmp.name) / 'absent.path'))

	def test_file_that_is_not_utf8(self):
		error = self.assertExitCode(2, 'reduce', self.write_bytes('binary.path', b'dim 2\nbase 0 0\nv 1 \xff\n'))
		self.assertIn('binary.path', str(error))


class HolonomyCommandTests(CommandTestCase):
	def test_zero_field_is_identity(self):
		W = parse_matrix(self.run_command('holonomy', field_file('zero'), path_file('bent3d')))
		np.testing.assert_allclose(W, np.eye(2), atol=1e-14)

	def test_uniform_square(self):
		H = parse_matrix(self.run_command('holonomy', field_file('u1_uniform'), path_file('square')))[0, 0]
		self.assertAlmostEqual(H, 0.96891242 + 0.24740396j, places=8)

	def test_step_count_changes_within_integrator_error(self):
		coarse = parse_matrix(self.run_command('holonomy', field_file('u1_uniform'), path_file('square'), steps='1'))[0, 0]
		fine = parse_matrix(self.run_command('holonomy', field_file('u1_uniform'), path_file('square'), steps='64'))[0, 0]
		# two segments carry phase 0.125 each; one RK4 step misses about 0.125**5 / 120 per segment
		gap = 2 * 0.125 ** 5 / 120
		self.assertGreater(abs(coarse - fine), 0.8 * gap)
		self.assertLess(abs(coarse - fine), 1.2 * gap)

	def test_without_reunitarization(self):
		H = parse_matrix(self.run_command('holonomy', field_file('u1_uniform'), path_file('square'), no_reunit=True))[0, 0]
		self.assertLessEqual(abs(H - cmath.exp(0.25j)), 1e-8)

	def test_input_errors(self):
		self.assertExitCode(2, 'holonomy', field_file('u1_uniform'), path_file('bent3d'))
		self.assertExitCode(2, 'holonomy', field_file('u1_uniform'), path_file('square'), steps='0')
		self.assertExitCode(2, 'holonomy', self.write('bad.field', "group u1\ndim 2\nC 1 1 0\n"), path_file('square'))
		self.assertExitCode(2, 'holonomy', self.write_bytes('binary.field', b'group u1\n\xff\n'), path_file('square'))


class DeriveCommandTests(CommandTestCase):
	def result(self, *args, **options):
		lines = self.run_command('derive', *args, **options).strip().splitlines()
		stats = dict(part.split('=') for part in lines[-1].split())
		return parse_matrix("\n".join(lines[:-1])), float(stats['order']), float(stats['err'])

	def test_mandelstam_on_zero_field(self):
		value, _, err = self.result('mandelstam', field_file('zero'), path_file('bent3d'), mu='1')
		self.assertLessEqual(float(np.linalg.norm(value)), 1e-12)
		self.assertLessEqual(err, 1e-12)

	def test_loop_at_origin_is_field_strength(self):
		value, _, _ = self.result('loop', field_file('u1_uniform'), path_file('origin'), mu='1', nu='2')
		self.assertAlmostEqual(value[0, 0], 1j, places=6)
		value, _, _ = self.result('loop', field_file('u1_uniform'), path_file('origin'), u='1,0', v='0,2')
		self.assertAlmostEqual(value[0, 0], 2j, places=6)

	def test_connection_with_transport_section(self):
		value, _, _ = self.result('connection', field_file('su2_affine'), path_file('bent3d'), mu='2', section='transport')
		self.assertLessEqual(float(np.linalg.norm(value)), 1e-10)

	def test_connection_with_arc_section(self):
		value, _, err = self.result('connection', field_file('su2_affine'), path_file('bent3d'), mu='1', section='arc')
		self.assertEqual(value.shape, (2, 2))
		self.assertLess(err, 1e-6)

	def test_scheme_flags(self):
		value, order, _ = self.result(
			'mandelstam', field_file('su2_affine'), path_file('bent3d'), v='0,1,0',
			eps_list='0.02,0.01,0.005,0.0025', stencil='central',
		)
		self.assertEqual(value.shape, (2, 2))
		self.assertGreater(order, 1.8)
		self.assertLess(order, 2.2)

	def test_input_errors(self):
		zero, bent = field_file('zero'), path_file('bent3d')
		self.assertExitCode(2, 'derive', 'gradient', zero, bent, mu='1')
		self.assertExitCode(2, 'derive', 'connection', zero, bent, mu='1')
		self.assertExitCode(2, 'derive', 'connection', zero, bent, mu='1', section='spiral')
		self.assertExitCode(2, 'derive', 'loop', zero, bent, mu='1')
		self.assertExitCode(2, 'derive', 'loop', zero, bent, mu='1', nu='1')
		self.assertExitCode(2, 'derive', 'mandelstam', zero, bent, mu='1', eps_list='0.001,0.01')
		self.assertExitCode(2, 'derive', 'mandelstam', zero, bent, mu='1', stencil='backward')
		self.assertExitCode(2, 'derive', 'mandelstam', zero, bent, mu='x')
		self.assertExitCode(2, 'derive', 'connection', field_file('u1_uniform'), path_file('origin'), mu='1', section='arc')


class VerifyCommandTests(CommandTestCase):
	def test_zero_field_passes(self):
		out_file = FilePath(self.tmp.name) / 'report.csv'
		self.run_command('verify', field_file('zero'), trials='2', out=str(out_file))
		lines = out_file.read_text(encoding='utf-8').splitlines()
		self.assertEqual(lines[0], ",".join(REPORT_HEADER))
		self.assertEqual(len(lines), len(Identity) + 2)
		self.assertTrue(all(line.endswith(",true") for line in lines[1:]))
		self.assertTrue(lines[-1].startswith("ALL,"))

	def test_reports_are_deterministic(self):
		first = self.run_command('verify', field_file('su2_affine'), seed='7', trials='2', out='-')
		second = self.run_command('verify', field_file('su2_affine'), seed='7', trials='2', out='-')
		self.assertEqual(first, second)

	def test_su2_reference_field_passes(self):
		out = self.run_command('verify', field_file('su2_affine'), out='-')
		self.assertTrue(out.strip().splitlines()[-1].endswith(",true"))

	def test_zero_curvature_tolerance_fails(self):
		tol_file = self.write('tol.yaml', "curvature: 0\n")
		out_file = FilePath(self.tmp.name) / 'failed.csv'
		self.assertExitCode(1, 'verify', field_file('su2_affine'), trials='2', tol_file=tol_file, out=str(out_file))
		self.assertIn("curvature,2,", out_file.read_text(encoding='utf-8'))

	def test_input_errors(self):
		su2 = field_file('su2_affine')
		self.assertExitCode(2, 'verify', su2, tol_file=self.write('bad.yaml', "curvatur: 1\n"))
		self.assertExitCode(2, 'verify', su2, tol_file=self.write('list.yaml', "- 1\n- 2\n"))
		self.assertExitCode(2, 'verify', su2, tol_file=self.write('broken.yaml', "curvature: [1\n"))
		self.assertExitCode(2, 'verify', su2, tol_file=self.write_bytes('binary.yaml', b'curvature: \xff\n'))
		self.assertExitCode(2, 'verify', su2, trials='0')
		self.assertExitCode(2, 'verify', su2, seed='-3')
		self.assertExitCode(2, 'verify', self.write('line.field', "group u1\ndim 1\n"), out='-')
