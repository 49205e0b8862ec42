class ObsearchError(Exception):
    """Base class for every error raised by the obsearch apps."""


class ChannelConfigError(ObsearchError):
    """An observation space or preset was requested that cannot exist.

    These are configuration bugs (unknown preset, missing channel, bad history
    length), never runtime conditions of a rollout.
    """
