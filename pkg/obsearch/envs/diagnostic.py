"""Diagnostic environment with known channel relevance.

A hidden, mildly unstable linear core ``s`` (one dimension per relevant channel)
is driven by the action; the reward ``exp(-|s|^2)`` depends on nothing else.
Noise channels are independent AR(1) processes. The optional deceptive channel
reports the discounted zero-action reward-to-go for the first
``DECEPTIVE_STEPS`` steps of an episode. After that it keeps adding the step
reward to its last value, the way a raw horizontal position accumulates forward
progress: it starts on the reward-to-go scale, then grows with episode length
and no longer says anything about what lies ahead.
"""
import numpy as np

from observations.exceptions import ChannelConfigError
from observations.models import ChannelGroup as G
from observations.models import ChannelSource as S
from observations.models import PresetName
from observations.registry import RegistryBuilder
from envs.base import Env
from envs.models import DoneReason, EnvId, EnvSpec, EnvState, Transition

ACTION_GAIN = 0.2
PROCESS_NOISE = 0.05
NOISE_DECAY = 0.9
NOISE_SCALE = 0.1
FAIL_RADIUS = 2.0
DISCOUNT = 0.99
LOOKAHEAD = 50
DECEPTIVE_STEPS = 10


class DiagnosticEnv(Env):
    def __init__(self, relevant_dims: int = 2, noise_dims: int = 2, deceptive: bool = False,
                 seed: int = 0, horizon: int = 200, dt: float = 0.01):
        if relevant_dims < 1:
            raise ChannelConfigError(f"relevant_dims must be >= 1, got {relevant_dims}")
        self.relevant_dims = relevant_dims
        self.noise_dims = noise_dims
        self.deceptive = deceptive
        structure = np.random.default_rng(seed)
        self.growth = 1.0 + structure.uniform(0.03, 0.07, size=relevant_dims)
        self.rng = np.random.default_rng(seed)
        self.spec = EnvSpec(
            env_id=EnvId.DIAGNOSTIC,
            action_dim=relevant_dims,
            joint_count=relevant_dims,
            body_count=0,
            contact_site_count=0,
            root_dofs=0,
            dt=dt,
            horizon=horizon,
            reward_description="exp(-|s|^2) of the hidden linear core",
            action_low=(-1.0,) * relevant_dims,
            action_high=(1.0,) * relevant_dims,
        )

    # channels -----------------------------------------------------------

    def channel_registry(self):
        b = RegistryBuilder()
        b.add("signal_0", G.JOINT_POSITION, 1, "extra", index="signal_0", source=S.RAW_SENSOR)
        for i in range(1, self.relevant_dims):
            b.add(f"signal_{i}", G.ROOT_VELOCITY, 1, "extra", index=f"signal_{i}", source=S.ESTIMATED)
        for j in range(self.noise_dims):
            group = G.ROOT_POSITION if j % 2 == 0 else G.CARTESIAN_POSITION
            b.add(f"noise_{j}", group, 1, "extra", index=f"noise_{j}")
        if self.deceptive:
            b.add("deceptive", G.EXTRA, 1, "extra", index="deceptive")
        b.add("prev_action", G.PREVIOUS_ACTION, self.spec.action_dim, "prev_action")
        return b.build()

    @property
    def relevant_channels(self) -> list[str]:
        return [f"signal_{i}" for i in range(self.relevant_dims)]

    @property
    def noise_channels(self) -> list[str]:
        return [f"noise_{j}" for j in range(self.noise_dims)]

    def preset_channels(self, name):
        """Analogs of the named configurations: RS sees one core dimension, Ours all of them."""
        signals, noise = self.relevant_channels, self.noise_channels
        table = {
            PresetName.RS: signals[:1],
            PresetName.GC: signals,
            PresetName.MC: signals + noise,
            PresetName.OAI: signals,
            PresetName.RS_CP: signals[:1] + noise,
            PresetName.OURS: signals,
        }
        if name == PresetName.RS_C:
            raise ChannelConfigError("RS+C needs contact sensors; the diagnostic environment has none")
        if name == PresetName.OURS_X:
            if not self.deceptive:
                raise ChannelConfigError("Ours+x on the diagnostic environment needs deceptive=True")
            return signals + ["deceptive"]
        if name not in table:
            raise ChannelConfigError(f"unknown observation preset {name!r}")
        return table[name]

    # dynamics -----------------------------------------------------------

    def reward_of(self, core: np.ndarray) -> float:
        return float(np.exp(-core @ core))

    def reward_to_go(self, core: np.ndarray) -> float:
        steps = self.growth[None, :] ** np.arange(LOOKAHEAD)[:, None] * core[None, :]
        return float(np.sum(DISCOUNT ** np.arange(LOOKAHEAD) * np.exp(-np.sum(steps ** 2, axis=1))))

    def _state(self, core, prev_core, noise, deceptive, t, last_action) -> EnvState:
        extras = {f"signal_{i}": core[i:i + 1].copy() for i in range(self.relevant_dims)}
        extras.update({f"noise_{j}": noise[j:j + 1].copy() for j in range(self.noise_dims)})
        if self.deceptive:
            extras["deceptive"] = np.array([deceptive])
        empty2 = np.zeros((0, 2))
        return EnvState(
            q=core.copy(),
            qdot=(core - prev_core) / self.spec.dt,
            root_dofs=0,
            com_pos=empty2,
            com_rel=empty2.copy(),
            com_vel=empty2.copy(),
            body_rot=np.zeros(0),
            body_omega=np.zeros(0),
            root_acc=np.zeros(2),
            contacts=np.zeros(0, dtype=np.int64),
            last_action=np.asarray(last_action, dtype=np.float64).copy(),
            t=t,
            extras=extras,
        )

    def reset(self, seed):
        self.rng = np.random.default_rng(seed)
        core = self.rng.uniform(-0.1, 0.1, size=self.relevant_dims)
        noise = self.rng.normal(0.0, NOISE_SCALE, size=self.noise_dims)
        return self._state(core, core, noise, self.reward_to_go(core), 0, np.zeros(self.spec.action_dim))

    def step(self, state, action):
        action = self.spec.clamp(action)
        core = state.q
        next_core = self.growth * core + ACTION_GAIN * action
        next_core += self.rng.normal(0.0, PROCESS_NOISE, size=self.relevant_dims)
        noise = np.array([state.extras[f"noise_{j}"][0] for j in range(self.noise_dims)])
        noise = NOISE_DECAY * noise + self.rng.normal(0.0, NOISE_SCALE, size=self.noise_dims)
        t = state.t + 1
        reward = self.reward_of(next_core)
        deceptive = 0.0
        if self.deceptive:
            if t < DECEPTIVE_STEPS:
                deceptive = self.reward_to_go(next_core)
            else:
                deceptive = float(state.extras["deceptive"][0]) + reward
        next_state = self._state(next_core, core, noise, deceptive, t, action)
        if np.max(np.abs(next_core)) > FAIL_RADIUS:
            return Transition(state, action, reward, next_state, True, DoneReason.FAILURE)
        if t >= self.spec.horizon:
            return Transition(state, action, reward, next_state, True, DoneReason.HORIZON)
        return Transition(state, action, reward, next_state, False, None)


def make_diagnostic_env(relevant_dims: int, noise_dims: int, deceptive: bool, seed: int = 0,
                        **kwargs) -> DiagnosticEnv:
    return DiagnosticEnv(relevant_dims=relevant_dims, noise_dims=noise_dims,
                         deceptive=deceptive, seed=seed, **kwargs)
