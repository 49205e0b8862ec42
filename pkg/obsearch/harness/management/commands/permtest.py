from harness.management.base import ExperimentCommand
from harness.runner import run_permtest_cmd


class Command(ExperimentCommand):
    help = "Dropout-permutation test of one observation space on every seed, optionally across dropout rates."
    command_name = 'permtest'
    runner = staticmethod(run_permtest_cmd)
