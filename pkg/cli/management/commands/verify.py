from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from cli.serializers import read_field_file, write_report
from cli.services import VERIFICATION_FAILED, input_errors, load_tolerances, parse_int, set_verbosity
from loopcalc.sysutils.exceptions import LoopCalcError
from verify.models import RandomSpec, Tolerances
from verify.services import run_identity_suite


class Command(BaseCommand):
    help = "Run the identity suite on a field and write the CSV report."

    def add_arguments(self, parser):
        parser.add_argument('field_file', help='FieldFile to verify')
        parser.add_argument('--seed', default='42', help='splitmix64 seed (default 42)')
        parser.add_argument('--trials', help='samples per identity, overriding the defaults')
        parser.add_argument('--tol-file', help='YAML mapping of identity name to tolerance')
        parser.add_argument(
            '--out',
            default='report.csv',
            help="Report path. Defaults to 'report.csv'. Use '-' to write to stdout.",
        )

    def handle(self, *args, **options):
        verbosity = options['verbosity']
        set_verbosity(verbosity)
        out = options['out']

        with input_errors():
            field = read_field_file(options['field_file'])
            tolerances = load_tolerances(options['tol_file']) if options.get('tol_file') else Tolerances()
            trials = parse_int(options.get('trials'), 'trials')
            if trials is not None:
                if trials < 1:
                    raise LoopCalcError("--trials must be at least 1")
                tolerances = tolerances.with_trials(trials)
            spec = RandomSpec(seed=parse_int(options['seed'], 'seed'), dim=field.dim)
            report = run_identity_suite(field, spec, tolerances=tolerances, progress=verbosity >= 2)
            text = write_report(report)

            if out == '-':
                self.stdout.write(text, ending='')
            else:
                output_path = Path(out)
                output_path.parent.mkdir(parents=True, exist_ok=True)
                output_path.write_text(text, encoding='utf-8')

        failed = [r.identity.value for r in report.records if not r.passed]
        if failed:
            raise CommandError(f"Identities failed: {', '.join(failed)}", returncode=VERIFICATION_FAILED)
        if out != '-':
            self.stdout.write(self.style.SUCCESS(f"All {len(report.records)} identities passed; report written to '{out}'."))
