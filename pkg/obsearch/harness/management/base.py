from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from observations.exceptions import ObsearchError
from harness.exceptions import AllSeedsFailed
from harness.serializer import load_experiment_config

CONFIG_ERROR = 1
ALL_SEEDS_FAILED = 2


class ExperimentCommand(BaseCommand):
    """Shared flags and error mapping of the bench, search and permtest commands."""

    command_name = None
    runner = None

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help="JSON experiment config")
        parser.add_argument('--seeds', type=int, help="number of seeds (overrides the config)")
        parser.add_argument('--workers', type=int, help="parallel worker processes")
        parser.add_argument('--out', help="output directory")
        parser.add_argument('--force', action='store_true', help="overwrite a run with the same config hash")

    def load_config(self, options):
        try:
            return load_experiment_config(options['config'], command=self.command_name, seeds=options['seeds'],
                                          workers=options['workers'], out=options['out'])
        except ValidationError as exc:
            raise CommandError(f"invalid config {options['config']}: {exc.detail}", returncode=CONFIG_ERROR)
        except ObsearchError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR)

    def handle(self, *args, **options):
        config = self.load_config(options)
        self.stdout.write(f"{self.command_name} {config.env_id}: {config.seeds} seeds, "
                          f"{config.training_steps} steps, run {config.config_hash}")
        try:
            record = self.runner(config, force=options['force'])
        except AllSeedsFailed as exc:
            raise CommandError(str(exc), returncode=ALL_SEEDS_FAILED)
        except ObsearchError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR)
        for failure in record.failed_seeds:
            self.stdout.write(self.style.WARNING(
                f"seed {failure['seed']} {failure['label']} failed: {failure['error']}"))
        self.stdout.write(self.style.SUCCESS(
            f"wrote {record.run_dir} ({len(record.completed_seeds)}/{config.seeds} seeds completed)"))
