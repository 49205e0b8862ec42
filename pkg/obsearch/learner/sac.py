"""Soft actor-critic with automatic entropy adjustment and optional input dropout."""
from __future__ import annotations

import logging

import numpy as np
from django.conf import settings

from observations.models import ObservationSpace
from observations.observation import ChannelOverride, ObservationBuilder, update_ranges
from learner.buffer import ReplayBuffer
from learner.exceptions import LearnerError, TrainingDiverged
from learner.mlp import MLP, Adam
from learner.models import TrainConfig, TrainedModel

logger = logging.getLogger(__name__)

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
SQUASH_EPS = 1e-6
EVAL_SEED_BASE = 1_000_000


def target_entropy(action_dim: int) -> float:
    if action_dim < 1:
        raise LearnerError(f"action_dim must be >= 1, got {action_dim}")
    return -float(action_dim)


def input_dropout(x: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Zero each coordinate with probability ``rate`` and rescale survivors by ``1 / (1 - rate)``."""
    if rate <= 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    return x * keep / (1.0 - rate)


class SoftActorCritic:
    def __init__(self, obs_dim: int, action_dim: int, config: TrainConfig,
                 rng: np.random.Generator | None = None, dropout_rate: float = 0.0):
        if not 0.0 <= dropout_rate < 1.0:
            raise LearnerError(f"dropout rate must lie in [0, 1), got {dropout_rate}")
        self.rng = rng if rng is not None else np.random.default_rng()
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.config = config
        self.dropout_rate = dropout_rate
        hidden = list(config.hidden_sizes)
        self.actor = MLP([obs_dim, *hidden, 2 * action_dim], self.rng)
        self.critics = [MLP([obs_dim + action_dim, *hidden, 1], self.rng) for _ in range(2)]
        self.targets = [c.copy() for c in self.critics]
        self.log_alpha = np.zeros(1)
        self.entropy_target = target_entropy(action_dim)
        lr = config.learning_rate
        self.actor_opt = Adam(self.actor.params, lr)
        self.critic_opts = [Adam(c.params, lr) for c in self.critics]
        self.alpha_opt = Adam([self.log_alpha], lr)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def _drop(self, obs: np.ndarray) -> np.ndarray:
        return input_dropout(obs, self.dropout_rate, self.rng)

    def _head(self, obs):
        out, cache = self.actor.forward(obs)
        mu, raw = out[:, :self.action_dim], out[:, self.action_dim:]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        unclipped = (raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)
        return mu, log_std, unclipped, cache

    def _squash(self, mu, log_std):
        eps = self.rng.standard_normal(mu.shape)
        std = np.exp(log_std)
        action = np.tanh(mu + std * eps)
        log_prob = np.sum(-0.5 * eps ** 2 - log_std - 0.5 * np.log(2.0 * np.pi)
                          - np.log(1.0 - action ** 2 + SQUASH_EPS), axis=1)
        return action, log_prob, eps, std

    def policy(self, obs: np.ndarray, deterministic: bool = False, training: bool = False) -> np.ndarray:
        """Squashed actions in ``[-1, 1]`` for a batch of observations."""
        obs = np.atleast_2d(obs)
        if training:
            obs = self._drop(obs)
        mu, log_std, _, _ = self._head(obs)
        if deterministic:
            return np.tanh(mu)
        return self._squash(mu, log_std)[0]

    def q_min(self, nets, obs, action):
        x = np.concatenate([obs, action], axis=1)
        return np.minimum(nets[0](x), nets[1](x))[:, 0]

    def update(self, batch) -> dict[str, float]:
        obs, actions, rewards, next_obs, terminals = batch
        n = obs.shape[0]
        alpha = self.alpha
        gamma = self.config.gamma

        mu2, log_std2, _, _ = self._head(self._drop(next_obs))
        next_actions, next_log_prob, _, _ = self._squash(mu2, log_std2)
        next_q = self.q_min(self.targets, self._drop(next_obs), next_actions)
        target = rewards + gamma * (1.0 - terminals) * (next_q - alpha * next_log_prob)

        critic_in = np.concatenate([self._drop(obs), actions], axis=1)
        critic_loss = 0.0
        for critic, opt in zip(self.critics, self.critic_opts):
            q, cache = critic.forward(critic_in)
            diff = q[:, 0] - target
            critic_loss += 0.5 * float(np.mean(diff ** 2))
            grads, _ = critic.backward(cache, diff[:, None] / n)
            opt.step(grads)

        mu, log_std, unclipped, actor_cache = self._head(self._drop(obs))
        action, log_prob, eps, std = self._squash(mu, log_std)
        policy_in = np.concatenate([self._drop(obs), action], axis=1)
        q1, c1 = self.critics[0].forward(policy_in)
        q2, c2 = self.critics[1].forward(policy_in)
        _, g1 = self.critics[0].backward(c1, np.ones((n, 1)))
        _, g2 = self.critics[1].backward(c2, np.ones((n, 1)))
        first = (q1 <= q2)
        dq_da = np.where(first, g1, g2)[:, self.obs_dim:]
        actor_loss = float(np.mean(alpha * log_prob - np.minimum(q1, q2)[:, 0]))

        g_u = (alpha * 2.0 * action - dq_da * (1.0 - action ** 2)) / n
        d_log_std = (g_u * std * eps - alpha / n) * unclipped
        grads, _ = self.actor.backward(actor_cache, np.concatenate([g_u, d_log_std], axis=1))
        self.actor_opt.step(grads)

        self.alpha_opt.step([np.array([-np.mean(log_prob + self.entropy_target)])])
        self.soft_update()
        return {"critic_loss": critic_loss, "actor_loss": actor_loss, "alpha": self.alpha,
                "entropy": float(-np.mean(log_prob))}

    def soft_update(self) -> None:
        tau = self.config.tau
        for critic, target in zip(self.critics, self.targets):
            for p, t in zip(critic.params, target.params):
                t[...] = (1.0 - tau) * t + tau * p


def _scale(action, low, high):
    low, high = np.asarray(low), np.asarray(high)
    return low + (np.asarray(action) + 1.0) * (high - low) / 2.0


def train(env, space: ObservationSpace, steps: int, config: TrainConfig | None = None,
          dropout: float = 0.0, seed: int = 0) -> TrainedModel:
    """Collect ``steps`` environment steps with off-policy updates after warmup.

    Ranges of every channel in ``space`` are widened from all observed frames.
    Raises :class:`TrainingDiverged` when a loss stops being finite.
    """
    config = config or TrainConfig.for_env(env.spec.env_id)
    if steps < config.warmup_steps:
        raise LearnerError(f"{steps} training steps do not cover {config.warmup_steps} warmup steps")
    if space.action_dim != env.spec.action_dim:
        raise LearnerError(f"space {space.name!r} was built for action_dim {space.action_dim}, "
                           f"{env.spec.env_id} has {env.spec.action_dim}")
    agent_seq, episode_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(agent_seq)
    episode_rng = np.random.default_rng(episode_seq)
    spec = env.spec
    agent = SoftActorCritic(space.total_dim, spec.action_dim, config, rng, dropout)
    buffer = ReplayBuffer(config.buffer_capacity, space.total_dim, spec.action_dim, rng)
    model = TrainedModel(agent=agent, space=space, config=config, dropout_rate=dropout, seed=seed,
                         action_low=spec.action_low, action_high=spec.action_high, buffer=buffer)
    log_every = settings.OBSEARCH['LOG_EVERY_EPISODES']

    builder = ObservationBuilder(space)
    state = env.reset(int(episode_rng.integers(2 ** 31)))
    obs = builder.observe(state)
    update_ranges(space, obs)
    episode_return = 0.0
    for step in range(1, steps + 1):
        if step <= config.warmup_steps:
            squashed = rng.uniform(-1.0, 1.0, size=spec.action_dim)
        else:
            squashed = agent.policy(obs, training=True)[0]
        action = _scale(squashed, spec.action_low, spec.action_high)
        transition = env.step(state, action)
        builder.record_action(transition.action)
        next_obs = builder.observe(transition.next_state)
        update_ranges(space, next_obs)
        buffer.push(obs, squashed, transition.reward, next_obs, transition.terminal)
        episode_return += transition.reward

        if step > config.warmup_steps and step % config.steps_per_update == 0:
            losses = agent.update(buffer.sample(config.batch_size))
            if not all(np.isfinite(v) for v in losses.values()):
                raise TrainingDiverged(seed, step, ", ".join(f"{k}={v}" for k, v in losses.items()))

        if transition.done:
            model.reward_history.append((step, episode_return))
            if len(model.reward_history) % log_every == 0:
                logger.info("%s/%s seed=%d step=%d episodes=%d return=%.3f alpha=%.4f",
                            spec.env_id, space.name, seed, step, len(model.reward_history),
                            episode_return, agent.alpha)
            state = env.reset(int(episode_rng.integers(2 ** 31)))
            builder.reset()
            obs = builder.observe(state)
            update_ranges(space, obs)
            episode_return = 0.0
        else:
            state, obs = transition.next_state, next_obs
    model.steps = steps
    return model


def act(model: TrainedModel, obs, deterministic: bool = True) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (model.space.total_dim,):
        raise LearnerError(f"observation has shape {obs.shape}, model expects ({model.space.total_dim},)")
    squashed = model.agent.policy(obs, deterministic=deterministic)[0]
    return _scale(squashed, model.action_low, model.action_high)


def evaluate(model: TrainedModel, env, episodes: int | None = None,
             channel_override: ChannelOverride | None = None) -> float:
    """Mean return of deterministic episodes on fixed evaluation seeds; dropout never applies."""
    if episodes is None:
        episodes = settings.OBSEARCH['EVAL_EPISODES']
    if episodes < 1:
        raise LearnerError(f"episodes must be >= 1, got {episodes}")
    builder = ObservationBuilder(model.space, channel_override, np.random.default_rng(EVAL_SEED_BASE))
    returns = []
    for episode in range(episodes):
        state = env.reset(EVAL_SEED_BASE + episode)
        builder.reset()
        total = 0.0
        while True:
            transition = env.step(state, act(model, builder.observe(state)))
            builder.record_action(transition.action)
            total += transition.reward
            if transition.done:
                break
            state = transition.next_state
        returns.append(total)
    return float(np.mean(returns))
