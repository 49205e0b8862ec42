from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from django.db import models

from observations.exceptions import ChannelConfigError


class ChannelGroup(models.TextChoices):
    ROOT_POSITION = "root-position", "Root position"
    ROOT_VELOCITY = "root-velocity", "Root velocity"
    ROOT_ACCELERATION = "root-acceleration", "Root acceleration"
    JOINT_POSITION = "joint-position", "Joint position"
    JOINT_VELOCITY = "joint-velocity", "Joint velocity"
    CARTESIAN_POSITION = "cartesian-position", "Cartesian position"
    CARTESIAN_VELOCITY = "cartesian-velocity", "Cartesian velocity"
    BODY_ROTATION = "body-rotation", "Body rotation"
    CONTACT = "contact", "Contact"
    PREVIOUS_ACTION = "previous-action", "Previous action"
    EXTRA = "extra", "Extra"


class ChannelSource(models.TextChoices):
    RAW_SENSOR = "raw-sensor", "Raw sensor"
    ESTIMATED = "estimated", "Estimated"
    DERIVED = "derived", "Derived"


class PresetName(models.TextChoices):
    RS = "RS", "Raw sensors"
    GC = "GC", "Generalized coordinates"
    MC = "MC", "Maximal coordinates"
    OAI = "OAI", "Benchmark default"
    RS_C = "RS+C", "Raw sensors with contact flags"
    RS_CP = "RS+CP", "Raw sensors with Cartesian positions"
    OURS = "Ours", "Raw sensors with height and root velocity"
    OURS_X = "Ours+x", "Ours with raw horizontal position"


@dataclass
class ChannelSpec:
    """One named observation channel.

    ``key``/``index`` tell :func:`observations.observation.extract_channel` where the
    values live on an ``EnvState``; ``order`` is the registry insertion position and
    fixes the channel order inside every space. ``low``/``high`` hold the recorded
    value envelope (``+inf``/``-inf`` until the first sample).
    """

    name: str
    group: str
    dim: int
    key: str
    index: int | str | None = None
    units: tuple[str, ...] = ()
    source: str = ChannelSource.DERIVED
    order: int = 0
    low: np.ndarray | None = field(default=None, repr=False)
    high: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ChannelConfigError(f"channel {self.name!r} must have dim >= 1, got {self.dim}")
        if not self.units:
            self.units = ("",) * self.dim
        if len(self.units) != self.dim:
            raise ChannelConfigError(f"channel {self.name!r} has {len(self.units)} units for dim {self.dim}")
        if self.low is None:
            self.low = np.full(self.dim, np.inf)
        if self.high is None:
            self.high = np.full(self.dim, -np.inf)

    @property
    def has_range(self) -> bool:
        return bool(np.all(self.low <= self.high))

    def record(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        np.minimum(self.low, values, out=self.low)
        np.maximum(self.high, values, out=self.high)

    def range_pairs(self) -> list[tuple[float, float]] | None:
        if not self.has_range:
            return None
        return [(float(lo), float(hi)) for lo, hi in zip(self.low, self.high)]

    def copy(self) -> ChannelSpec:
        return copy.deepcopy(self)


@dataclass
class ObservationSpace:
    """An ordered, duplicate-free set of channels plus the history setting.

    ``total_dim = N * sum(dims) + (N - 1) * action_dim`` when previous actions are
    included, ``N * sum(dims)`` otherwise.
    """

    channels: list[ChannelSpec]
    action_dim: int
    history_len: int = 1
    include_prev_actions: bool = False
    name: str = "custom"

    def __post_init__(self):
        if self.history_len < 1:
            raise ChannelConfigError(f"history length must be >= 1, got {self.history_len}")
        names = [c.name for c in self.channels]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ChannelConfigError(f"channels appear twice in space {self.name!r}: {duplicates}")
        self.channels = sorted(self.channels, key=lambda c: c.order)

    @property
    def frame_dim(self) -> int:
        return sum(c.dim for c in self.channels)

    @property
    def total_dim(self) -> int:
        total = self.history_len * self.frame_dim
        if self.include_prev_actions:
            total += (self.history_len - 1) * self.action_dim
        return total

    @property
    def channel_names(self) -> list[str]:
        return [c.name for c in self.channels]

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.channels)

    def __len__(self) -> int:
        return len(self.channels)

    def channel(self, name: str) -> ChannelSpec:
        for spec in self.channels:
            if spec.name == name:
                return spec
        raise ChannelConfigError(f"channel {name!r} is not part of space {self.name!r}")

    def frame_slices(self) -> dict[str, slice]:
        slices, start = {}, 0
        for spec in self.channels:
            slices[spec.name] = slice(start, start + spec.dim)
            start += spec.dim
        return slices

    def copy(self, **changes) -> ObservationSpace:
        clone = copy.deepcopy(self)
        for attr, value in changes.items():
            setattr(clone, attr, value)
        clone.__post_init__()
        return clone

    def union(self, extra: list[ChannelSpec], name: str | None = None) -> ObservationSpace:
        """Add-only merge; channels already present keep their recorded ranges."""
        merged = [c.copy() for c in self.channels]
        merged += [c.copy() for c in extra if c.name not in self]
        return self.copy(channels=merged, name=name or self.name)

    def without(self, names: set[str] | list[str], name: str | None = None) -> ObservationSpace:
        removed = set(names)
        kept = [c.copy() for c in self.channels if c.name not in removed]
        return self.copy(channels=kept, name=name or self.name)


@dataclass(frozen=True)
class SensorGroup:
    """A set of channels the search proposes together."""

    name: str
    members: tuple[str, ...]

    def __post_init__(self):
        if not self.members:
            raise ChannelConfigError(f"sensor group {self.name!r} has no members")

    def contained_in(self, space: ObservationSpace) -> bool:
        return all(m in space for m in self.members)
