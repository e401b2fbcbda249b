from django.core.management.base import BaseCommand

from cli.serializers import format_matrix, read_field_file, read_path_file
from cli.services import input_errors, parse_int, set_verbosity
from gauge.models import IntegratorOptions
from gauge.services import holonomy


class Command(BaseCommand):
    help = "Print the holonomy (Wilson line) of a field along a path."

    def add_arguments(self, parser):
        parser.add_argument('field_file', help='FieldFile with the connection')
        parser.add_argument('path_file', help='PathFile to transport along')
        parser.add_argument('--steps', help='RK4 substeps per segment (default from settings)')
        parser.add_argument(
            '--no-reunit',
            action='store_true',
            help='Do not project substep propagators back onto the group',
        )

    def handle(self, *args, **options):
        set_verbosity(options['verbosity'])
        with input_errors():
            field = read_field_file(options['field_file'])
            path = read_path_file(options['path_file'])
            opts = {}
            steps = parse_int(options.get('steps'), 'steps')
            if steps is not None:
                opts['steps_per_segment'] = steps
            if options['no_reunit']:
                opts['reunitarize'] = False
            W = holonomy(field, path, IntegratorOptions(**opts))
        self.stdout.write(format_matrix(W), ending='')
