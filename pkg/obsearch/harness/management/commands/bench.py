from harness.management.base import ExperimentCommand
from harness.runner import run_bench


class Command(ExperimentCommand):
    help = "Train each preset observation space on every seed and compare the learning curves."
    command_name = 'bench'
    runner = staticmethod(run_bench)
