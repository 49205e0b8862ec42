"""Observation assembly: channel extraction, history stacking and range tracking."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from observations.exceptions import ChannelConfigError
from observations.models import ChannelSpec, ObservationSpace

if TYPE_CHECKING:
    from envs.models import EnvState


def _root_relative_q(state: EnvState) -> np.ndarray:
    q = state.q.astype(np.float64, copy=True)
    if state.root_dofs:
        q[0] -= state.root_x
    return q


_ACCESSORS: dict[str, Callable[[EnvState, ChannelSpec], np.ndarray]] = {
    "q_jt": lambda s, c: s.q[s.root_dofs:],
    "qdot_jt": lambda s, c: s.qdot[s.root_dofs:],
    "theta": lambda s, c: s.body_rot[:1],
    "theta_dot": lambda s, c: s.body_omega[:1],
    "root_acc": lambda s, c: s.root_acc,
    "q": lambda s, c: _root_relative_q(s),
    "qdot": lambda s, c: s.qdot,
    "z": lambda s, c: s.com_pos[0, 1:2],
    "x": lambda s, c: np.array([s.root_x]),
    "com_pos": lambda s, c: s.com_rel[c.index],
    "com_vel": lambda s, c: s.com_vel[c.index],
    "body_rot": lambda s, c: s.body_rot[c.index:c.index + 1],
    "contacts": lambda s, c: s.contacts.astype(np.float64),
    "prev_action": lambda s, c: s.last_action,
    "extra": lambda s, c: s.extras[c.index],
}


def extract_channel(state: EnvState, spec: ChannelSpec) -> np.ndarray:
    """Values of one channel; every global position is relative to the root's horizontal x."""
    accessor = _ACCESSORS.get(spec.key)
    if accessor is None:
        raise ChannelConfigError(f"channel {spec.name!r} has unknown accessor {spec.key!r}")
    try:
        values = np.asarray(accessor(state, spec), dtype=np.float64).reshape(-1)
    except (IndexError, KeyError, TypeError) as exc:
        raise ChannelConfigError(f"state does not expose channel {spec.name!r}") from exc
    if values.shape[0] != spec.dim:
        raise ChannelConfigError(
            f"channel {spec.name!r} expects {spec.dim} values, state provides {values.shape[0]}")
    return values


def extract_frame(state: EnvState, space: ObservationSpace) -> np.ndarray:
    if not space.channels:
        return np.zeros(0)
    return np.concatenate([extract_channel(state, c) for c in space.channels])


class FrameHistory:
    """Past frames and actions, newest first, bounded to ``N - 1`` entries."""

    def __init__(self, space: ObservationSpace):
        depth = space.history_len - 1
        self.frames: deque[np.ndarray] = deque(maxlen=depth)
        self.actions: deque[np.ndarray] = deque(maxlen=depth)

    def push(self, frame: np.ndarray, action: np.ndarray) -> None:
        if self.frames.maxlen:
            self.frames.appendleft(np.asarray(frame, dtype=np.float64))
            self.actions.appendleft(np.asarray(action, dtype=np.float64))

    def clear(self) -> None:
        self.frames.clear()
        self.actions.clear()


def stack_observation(frame: np.ndarray, space: ObservationSpace, history: FrameHistory) -> np.ndarray:
    """``[o_t, o_t-1, ..., o_t-N+1, a_t-1, ..., a_t-N+1]``, zero-padded at episode start."""
    depth = space.history_len - 1
    parts = [frame]
    past = list(history.frames)[:depth]
    parts += past + [np.zeros(space.frame_dim)] * (depth - len(past))
    if space.include_prev_actions:
        acts = list(history.actions)[:depth]
        parts += acts + [np.zeros(space.action_dim)] * (depth - len(acts))
    return np.concatenate(parts) if parts else np.zeros(0)


def build_observation(state: EnvState, space: ObservationSpace, history: FrameHistory) -> np.ndarray:
    return stack_observation(extract_frame(state, space), space, history)


def augment_history(space: ObservationSpace, n: int) -> ObservationSpace:
    if n < 1:
        raise ChannelConfigError(f"history length must be >= 1, got {n}")
    name = space.name.split("-")[0] + (f"-{n}" if n > 1 else "")
    return space.copy(history_len=n, include_prev_actions=n > 1, name=name)


def update_ranges(space: ObservationSpace, frame: np.ndarray) -> None:
    """Expand each channel's envelope with the newest frame of an observation vector."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (space.total_dim,):
        raise ChannelConfigError(
            f"observation has length {frame.size}, space {space.name!r} expects {space.total_dim}")
    for spec, sl in zip(space.channels, space.frame_slices().values()):
        spec.record(frame[sl])


class RangeSampler:
    """Uniform draws inside a channel's recorded envelope."""

    def __init__(self, spec: ChannelSpec):
        if not spec.has_range:
            raise ChannelConfigError(f"channel {spec.name!r} has no recorded range to sample from")
        self.low = spec.low.copy()
        self.high = spec.high.copy()

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)


@dataclass
class ChannelOverride:
    """Replace one channel's values with ``sampler(rng)`` on every step."""

    channel: str
    sampler: Callable[[np.random.Generator], np.ndarray]


class ObservationBuilder:
    """Stateful per-episode wrapper around :func:`build_observation`."""

    def __init__(self, space: ObservationSpace, override: ChannelOverride | None = None,
                 rng: np.random.Generator | None = None):
        self.space = space
        self.history = FrameHistory(space)
        self.override = override
        self.rng = rng if rng is not None else np.random.default_rng()
        self._override_slice = None
        if override is not None:
            space.channel(override.channel)
            self._override_slice = space.frame_slices()[override.channel]
        self._frame = np.zeros(space.frame_dim)

    def reset(self) -> None:
        self.history.clear()

    def observe(self, state: EnvState) -> np.ndarray:
        frame = extract_frame(state, self.space)
        if self.override is not None:
            frame[self._override_slice] = self.override.sampler(self.rng)
        self._frame = frame
        return stack_observation(frame, self.space, self.history)

    def record_action(self, action: np.ndarray) -> None:
        self.history.push(self._frame, action)
