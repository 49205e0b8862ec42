from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from django.db import models

from envs.exceptions import EnvError


class EnvId(models.TextChoices):
    PENDULUM = "pendulum", "Cart double pendulum"
    HOPPER = "hopper", "Planar hopper"
    DIAGNOSTIC = "diagnostic", "Diagnostic linear core"


class DoneReason(models.TextChoices):
    HORIZON = "horizon", "Horizon reached"
    FAILURE = "failure", "Failure"


@dataclass(frozen=True)
class EnvSpec:
    env_id: str
    action_dim: int
    joint_count: int
    body_count: int
    contact_site_count: int
    root_dofs: int
    dt: float
    horizon: int
    reward_description: str
    action_low: tuple[float, ...]
    action_high: tuple[float, ...]

    def __post_init__(self):
        if self.dt <= 0:
            raise EnvError(f"dt must be positive, got {self.dt}")
        if self.horizon < 1:
            raise EnvError(f"horizon must be >= 1, got {self.horizon}")
        if len(self.action_low) != self.action_dim or len(self.action_high) != self.action_dim:
            raise EnvError("action bounds do not match action_dim")
        if not (np.all(np.isfinite(self.action_low)) and np.all(np.isfinite(self.action_high))):
            raise EnvError("action bounds must be finite")

    def clamp(self, action) -> np.ndarray:
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape != (self.action_dim,):
            raise EnvError(f"action has {action.size} entries, {self.env_id} expects {self.action_dim}")
        return np.clip(action, self.action_low, self.action_high)


@dataclass
class EnvState:
    """Generalized coordinates plus the derived body quantities observed by channels.

    ``q = [root pose, joint angles]``; ``com_pos``/``com_vel`` are ``(bodies, 2)``
    world-frame arrays, ``com_rel`` the same positions with the root moved to x = 0;
    ``body_rot``/``body_omega`` the planar rotation angle and rate
    of each body. ``root_acc`` is the finite-differenced root COM acceleration.
    """

    q: np.ndarray
    qdot: np.ndarray
    root_dofs: int
    com_pos: np.ndarray
    com_vel: np.ndarray
    body_rot: np.ndarray
    body_omega: np.ndarray
    root_acc: np.ndarray
    contacts: np.ndarray
    last_action: np.ndarray
    t: int = 0
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    com_rel: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def root_x(self) -> float:
        return float(self.q[0]) if self.root_dofs else 0.0

    def is_finite(self) -> bool:
        arrays = [self.q, self.qdot, self.com_pos, self.com_vel, self.root_acc, *self.extras.values()]
        return all(np.all(np.isfinite(a)) for a in arrays)

    def copy(self) -> EnvState:
        return copy.deepcopy(self)


@dataclass
class Transition:
    state: EnvState
    action: np.ndarray
    reward: float
    next_state: EnvState
    done: bool
    done_reason: str | None = None

    @property
    def terminal(self) -> bool:
        """True only for failures; horizon cut-offs still bootstrap."""
        return self.done_reason == DoneReason.FAILURE


@dataclass
class BodyKinematics:
    com_pos: np.ndarray
    com_vel: np.ndarray
    body_rot: np.ndarray
    body_omega: np.ndarray

    @property
    def rotation_matrices(self) -> np.ndarray:
        """``R_i`` for every body, shape ``(bodies, 2, 2)``."""
        c, s = np.cos(self.body_rot), np.sin(self.body_rot)
        return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)
