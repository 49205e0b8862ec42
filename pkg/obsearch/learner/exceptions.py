from observations.exceptions import ObsearchError


class LearnerError(ObsearchError):
    """Invalid training configuration or model input."""


class TrainingDiverged(LearnerError):
    """A loss became non-finite; the run is reported as a failed seed."""

    def __init__(self, seed, step, detail=""):
        self.seed = seed
        self.step = step
        super().__init__(f"training diverged at step {step} (seed {seed}){': ' + detail if detail else ''}")
