from observations.exceptions import ObsearchError


class HarnessError(ObsearchError):
    """An experiment cannot be started or reported."""


class RunExistsError(HarnessError):
    def __init__(self, run_dir):
        self.run_dir = run_dir
        super().__init__(f"{run_dir} already holds a run with this config; pass --force to overwrite")


class AllSeedsFailed(HarnessError):
    def __init__(self, run_dir, failures):
        self.run_dir = run_dir
        self.failures = failures
        super().__init__(f"every seed of {run_dir} failed: {failures}")
