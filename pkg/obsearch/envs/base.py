"""Environment contract and the shared planar rigid-body stepping loop."""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod

import numpy as np

from observations.models import ChannelSpec
from observations.presets import standard_preset_channels
from observations.registry import rigid_body_channels
from envs.kinematics import PlanarChain
from envs.models import BodyKinematics, DoneReason, EnvSpec, EnvState, Transition

logger = logging.getLogger(__name__)


class Env(ABC):
    spec: EnvSpec

    def channel_registry(self) -> list[ChannelSpec]:
        return rigid_body_channels(self.spec)

    def preset_channels(self, name: str) -> list[str]:
        return standard_preset_channels(name, self.spec)

    @abstractmethod
    def reset(self, seed: int) -> EnvState:
        """Sample an initial state; the same seed always gives the same state."""

    @abstractmethod
    def step(self, state: EnvState, action) -> Transition:
        """Advance one control step of ``spec.dt`` seconds."""

    def body_kinematics(self, q, qdot=None) -> BodyKinematics:
        raise NotImplementedError(f"{self.spec.env_id} has no articulated bodies")


class RigidBodyEnv(Env):
    """Semi-implicit Euler integration of a :class:`PlanarChain` at ``dt / substeps``."""

    chain: PlanarChain
    substeps: int = 10
    gravity: float = 9.81
    reset_noise: float = 0.005

    def __init__(self):
        self.rng = np.random.default_rng(0)

    # hooks for subclasses
    def nominal_q(self) -> np.ndarray:
        return np.zeros(self.chain.n_q)

    @abstractmethod
    def generalized_force(self, q, qdot, action) -> np.ndarray:
        """Actuator, passive and contact forces mapped to generalized coordinates."""

    @abstractmethod
    def reward(self, state: EnvState, next_state: EnvState, action) -> float:
        ...

    @abstractmethod
    def failed(self, state: EnvState) -> bool:
        ...

    def contact_flags(self, q) -> np.ndarray:
        return np.zeros(0, dtype=np.int64)

    def body_kinematics(self, q, qdot=None) -> BodyKinematics:
        return self.chain.body_kinematics(q, qdot)

    def make_state(self, q, qdot, t, last_action, prev_root_vel=None) -> EnvState:
        q = np.asarray(q, dtype=np.float64)
        # body quantities come from the pose with the root at x = 0 so observations never see x
        local = q.copy()
        root_x = 0.0
        if self.chain.root_dofs:
            root_x, local[0] = float(q[0]), 0.0
        kin = self.chain.body_kinematics(local, qdot)
        root_acc = np.zeros(2)
        if prev_root_vel is not None:
            root_acc = (kin.com_vel[0] - prev_root_vel) / self.spec.dt
        return EnvState(
            q=np.asarray(q, dtype=np.float64).copy(),
            qdot=np.asarray(qdot, dtype=np.float64).copy(),
            root_dofs=self.chain.root_dofs,
            com_pos=kin.com_pos + np.array([root_x, 0.0]),
            com_rel=kin.com_pos,
            com_vel=kin.com_vel,
            body_rot=kin.body_rot,
            body_omega=kin.body_omega,
            root_acc=root_acc,
            contacts=self.contact_flags(q),
            last_action=np.asarray(last_action, dtype=np.float64).copy(),
            t=t,
            extras={
                "time": np.array([t * self.spec.dt]),
                "frame": np.array([float(t)]),
                "random": self.rng.uniform(-1.0, 1.0, size=1),
            },
        )

    def reset(self, seed: int) -> EnvState:
        self.rng = np.random.default_rng(seed)
        noise = self.reset_noise
        q = self.nominal_q() + self.rng.uniform(-noise, noise, size=self.chain.n_q)
        qdot = self.rng.uniform(-noise, noise, size=self.chain.n_q)
        return self.make_state(q, qdot, t=0, last_action=np.zeros(self.spec.action_dim))

    def integrate(self, q, qdot, action):
        h = self.spec.dt / self.substeps
        q, qdot = q.copy(), qdot.copy()
        for _ in range(self.substeps):
            qddot = self.chain.dynamics(q, qdot, self.generalized_force(q, qdot, action), self.gravity)
            qdot = qdot + h * qddot
            q = q + h * qdot
        return q, qdot

    def step(self, state: EnvState, action) -> Transition:
        action = self.spec.clamp(action)
        with np.errstate(all="ignore"):
            try:
                q, qdot = self.integrate(state.q, state.qdot, action)
            except np.linalg.LinAlgError:
                q = qdot = np.full_like(state.q, np.nan)
        t = state.t + 1
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qdot))):
            logger.warning("%s: non-finite state at t=%d, ending episode", self.spec.env_id, t)
            stalled = state.copy()
            stalled.t = t
            return Transition(state, action, 0.0, stalled, True, DoneReason.FAILURE)
        next_state = self.make_state(q, qdot, t, action, prev_root_vel=state.com_vel[0])
        reward = float(self.reward(state, next_state, action))
        if self.failed(next_state):
            return Transition(state, action, reward, next_state, True, DoneReason.FAILURE)
        if t >= self.spec.horizon:
            return Transition(state, action, reward, next_state, True, DoneReason.HORIZON)
        return Transition(state, action, reward, next_state, False, None)
