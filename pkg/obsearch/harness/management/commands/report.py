from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from harness.exceptions import HarnessError
from harness.management.base import CONFIG_ERROR
from harness.report import run_report
from harness.serializer import load_experiment_config


class Command(BaseCommand):
    help = "Aggregate every run below an output directory into CSV tables and overlay plots."

    def add_arguments(self, parser):
        parser.add_argument('--config', help="experiment config whose output directory is reported")
        parser.add_argument('--out', help="directory to scan (defaults to the config's or the settings' output)")
        parser.add_argument('--report-dir', help="where to write the report (defaults to the scanned directory)")

    def handle(self, *args, **options):
        directory = options['out']
        if directory is None and options['config']:
            try:
                directory = load_experiment_config(options['config']).out_dir
            except ValidationError as exc:
                raise CommandError(f"invalid config {options['config']}: {exc.detail}", returncode=CONFIG_ERROR)
        directory = directory or settings.OBSEARCH['OUT_DIR']
        try:
            paths = run_report(directory, options['report_dir'])
        except HarnessError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR)
        for path in paths.values():
            self.stdout.write(self.style.SUCCESS(f"wrote {path}"))
