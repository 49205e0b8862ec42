from observations.exceptions import ObsearchError


class GroupsExhausted(ObsearchError):
    """Every candidate group is already part of the best space."""


class SearchConfigError(ObsearchError):
    """Invalid search settings."""
