from harness.management.base import ExperimentCommand
from harness.runner import run_search_cmd


class Command(ExperimentCommand):
    help = "Search for an observation space on every seed; count the accepted groups and retrain against RS and OAI."
    command_name = 'search'
    runner = staticmethod(run_search_cmd)
