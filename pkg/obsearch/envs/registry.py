from envs.diagnostic import make_diagnostic_env
from envs.exceptions import EnvError
from envs.hopper import HopperEnv
from envs.models import EnvId
from envs.pendulum import CartDoublePendulumEnv

_FACTORIES = {
    EnvId.PENDULUM: CartDoublePendulumEnv,
    EnvId.HOPPER: HopperEnv,
    EnvId.DIAGNOSTIC: lambda **kw: make_diagnostic_env(
        kw.pop("relevant_dims", 2), kw.pop("noise_dims", 2), kw.pop("deceptive", False), **kw),
}


def make_env(env_id: str, **kwargs):
    """Build an environment from its string id; ``kwargs`` go to the constructor."""
    try:
        factory = _FACTORIES[EnvId(env_id)]
    except ValueError:
        raise EnvError(f"unknown environment {env_id!r}; choose from {', '.join(EnvId.values)}") from None
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise EnvError(f"bad options for environment {env_id!r}: {exc}") from exc
