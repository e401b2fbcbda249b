import math

from django.core.management.base import BaseCommand

from calculus.services import (
    arc_section,
    connection_derivative,
    holonomy_functional,
    loop_derivative,
    mandelstam_derivative,
    transport_section,
    unit,
)
from cli.serializers import format_matrix, read_field_file, read_path_file
from cli.services import input_errors, parse_int, parse_vector, scheme_from_options, set_verbosity
from loopcalc.sysutils.constants import DerivativeKind, SectionKind
from loopcalc.sysutils.exceptions import LoopCalcError
from paths.services import constant, endpoint


class Command(BaseCommand):
    help = "Differentiate the holonomy functional W: mandelstam, connection or loop derivative."

    def add_arguments(self, parser):
        parser.add_argument('kind', help='mandelstam | connection | loop')
        parser.add_argument('field_file')
        parser.add_argument('path_file')
        parser.add_argument('--mu', help='first direction index (1-based)')
        parser.add_argument('--nu', help='second direction index for loop')
        parser.add_argument('--u', help='comma-separated first direction for loop')
        parser.add_argument('--v', help='comma-separated direction (mandelstam) or second direction (loop)')
        parser.add_argument('--eps-list', help='comma-separated strictly decreasing step sizes')
        parser.add_argument('--stencil', help='central | forward')
        parser.add_argument('--section', help='transport | arc (connection only)')

    def handle(self, *args, **options):
        set_verbosity(options['verbosity'])
        with input_errors():
            kind = self._kind(options['kind'])
            field = read_field_file(options['field_file'])
            path = read_path_file(options['path_file'])
            scheme = scheme_from_options(options.get('eps_list'), options.get('stencil'))
            W = holonomy_functional(field)
            mu = parse_int(options.get('mu'), 'mu')
            nu = parse_int(options.get('nu'), 'nu')

            if kind is DerivativeKind.MANDELSTAM:
                if options.get('v') is not None:
                    v = parse_vector(options['v'], 'v')
                elif mu is not None:
                    v = unit(path.dim, mu)
                else:
                    raise LoopCalcError("mandelstam needs --mu or --v")
                result = mandelstam_derivative(W, path, v, scheme)
            elif kind is DerivativeKind.CONNECTION:
                if mu is None or options.get('section') is None:
                    raise LoopCalcError("connection needs --mu and --section")
                section = self._section(options['section'], path)
                result = connection_derivative(W, section, mu, scheme)
            else:
                if options.get('u') is not None and options.get('v') is not None:
                    u = parse_vector(options['u'], 'u')
                    v = parse_vector(options['v'], 'v')
                elif mu is not None and nu is not None:
                    u, v = unit(path.dim, mu), unit(path.dim, nu)
                else:
                    raise LoopCalcError("loop needs --mu and --nu, or --u and --v")
                result = loop_derivative(W, path, constant(path.base), u, v, scheme)

        self.stdout.write(format_matrix(result.value), ending='')
        order = "nan" if math.isnan(result.est_order) else format(result.est_order, '.6g')
        self.stdout.write(f"order={order} err={result.est_error:.6g}")

    @staticmethod
    def _kind(value: str) -> DerivativeKind:
        try:
            return DerivativeKind(value)
        except ValueError:
            choices = ", ".join(k.value for k in DerivativeKind)
            raise LoopCalcError(f"unknown derivative kind '{value}'; choose from {choices}")

    @staticmethod
    def _section(value: str, path):
        try:
            kind = SectionKind(value)
        except ValueError:
            choices = ", ".join(k.value for k in SectionKind)
            raise LoopCalcError(f"unknown section '{value}'; choose from {choices}")
        if kind is SectionKind.TRANSPORT:
            return transport_section(path)
        # the arc turns at the last-but-one point of the path
        points = (path.base, *path.vertices)
        if len(points) < 2:
            raise LoopCalcError("the arc section needs a path with at least one segment")
        return arc_section(path.base, points[-2], endpoint(path))
