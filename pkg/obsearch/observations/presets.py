"""Named observation configurations and the semantic groups the search proposes."""
from __future__ import annotations

import re
from typing import TYPE_CHECKING

from observations.exceptions import ChannelConfigError
from observations.models import ChannelGroup as G
from observations.models import ObservationSpace, PresetName, SensorGroup
from observations.observation import augment_history

if TYPE_CHECKING:
    from envs.base import Env
    from envs.models import EnvSpec

RS_CHANNELS = ["q_jt", "qdot_jt", "theta", "theta_dot", "root_acc"]

HISTORY_PRESET = re.compile(r"^(RS|OAI|Ours)-(\d+)$")

# Search group name -> channel groups whose members it proposes.
SEARCH_GROUPS: dict[str, tuple[str, ...]] = {
    "C1": (G.ROOT_POSITION,),
    "C1dot": (G.ROOT_VELOCITY,),
    "cartesian": (G.CARTESIAN_POSITION, G.CARTESIAN_VELOCITY, G.BODY_ROTATION),
    "contact": (G.CONTACT,),
    "prev_action": (G.PREVIOUS_ACTION,),
}


def standard_preset_channels(name: str, spec: EnvSpec) -> list[str]:
    """Channel names of each configuration for a planar articulated body."""
    bodies = range(1, spec.body_count + 1)
    positions = [f"C_{i}" for i in bodies]
    if name == PresetName.RS:
        return list(RS_CHANNELS)
    if name == PresetName.GC:
        return ["q", "qdot"]
    if name == PresetName.MC:
        return positions + [f"Cdot_{i}" for i in bodies] + [f"r_{i}" for i in bodies]
    if name == PresetName.OAI:
        return ["z", "theta", "q_jt", "qdot"]
    if name == PresetName.RS_C:
        if spec.contact_site_count == 0:
            raise ChannelConfigError(
                f"RS+C needs contact sensors; environment {spec.env_id!r} has no contact sites")
        return RS_CHANNELS + ["contacts"]
    if name == PresetName.RS_CP:
        return RS_CHANNELS + positions
    if name == PresetName.OURS:
        return RS_CHANNELS + ["z", "Cdot_1"]
    if name == PresetName.OURS_X:
        return RS_CHANNELS + ["z", "Cdot_1", "x"]
    raise ChannelConfigError(f"unknown observation preset {name!r}")


def space_from_names(env: Env, names: list[str], name: str = "custom") -> ObservationSpace:
    registry = {c.name: c for c in env.channel_registry()}
    missing = [n for n in names if n not in registry]
    if missing:
        raise ChannelConfigError(f"environment {env.spec.env_id!r} has no channels {missing}")
    return ObservationSpace(
        channels=[registry[n] for n in dict.fromkeys(names)],
        action_dim=env.spec.action_dim,
        name=name,
    )


def preset(name: str, env: Env) -> ObservationSpace:
    """Instantiate a named configuration (``RS``, ``Ours``, ``Ours-2``, ...) for ``env``."""
    match = HISTORY_PRESET.match(name)
    if match:
        return augment_history(preset(match.group(1), env), int(match.group(2)))
    if name not in PresetName.values:
        raise ChannelConfigError(
            f"unknown observation preset {name!r}; choose from {', '.join(PresetName.values)}")
    return space_from_names(env, env.preset_channels(name), name=name)


def semantic_groups(env: Env, group_names: list[str] | None = None) -> list[SensorGroup]:
    """Partition of the candidate pool by semantics; empty groups are dropped."""
    registry = env.channel_registry()
    groups = []
    for group_name in group_names or list(SEARCH_GROUPS):
        if group_name not in SEARCH_GROUPS:
            raise ChannelConfigError(f"unknown search group {group_name!r}")
        members = tuple(c.name for c in registry if c.group in SEARCH_GROUPS[group_name])
        if members:
            groups.append(SensorGroup(name=group_name, members=members))
    return groups
