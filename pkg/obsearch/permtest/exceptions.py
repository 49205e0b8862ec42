from observations.exceptions import ObsearchError


class PermTestError(ObsearchError):
    """The permutation test could not produce or apply a report."""
