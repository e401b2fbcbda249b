from django.core.management.base import BaseCommand

from cli.serializers import read_path_file, write_path
from cli.services import input_errors, set_verbosity
from paths.services import reduce


class Command(BaseCommand):
    help = "Print the reduced (retrace-free) form of a path file."

    def add_arguments(self, parser):
        parser.add_argument('path_file', help='PathFile to reduce')

    def handle(self, *args, **options):
        set_verbosity(options['verbosity'])
        with input_errors():
            path = read_path_file(options['path_file'])
        self.stdout.write(write_path(reduce(path)), ending='')
