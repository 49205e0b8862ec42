from observations.exceptions import ObsearchError


class EnvError(ObsearchError):
    """Malformed input to an environment (wrong dimension, unknown id)."""
