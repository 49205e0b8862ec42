import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from observations.exceptions import ChannelConfigError
from observations.observation import ChannelOverride, RangeSampler
from observations.presets import preset
from envs.diagnostic import make_diagnostic_env
from envs.pendulum import CartDoublePendulumEnv
from learner.buffer import ReplayBuffer
from learner.checkpoint import export_reward_history, load_checkpoint, save_checkpoint
from learner.exceptions import LearnerError
from learner.mlp import MLP
from learner.models import TrainConfig
from learner.sac import SoftActorCritic, act, evaluate, input_dropout, target_entropy, train
from learner.serializer import TrainConfigSerializer

TINY = dict(hidden_sizes=(16, 16), batch_size=32, warmup_steps=100, buffer_capacity=1000)


def _critic_loss(net, x, y):
    return 0.5 * float(np.mean((net(x) - y) ** 2))


class MLPGradientTests(SimpleTestCase):
    def test_backprop_matches_central_differences(self):
        rng = np.random.default_rng(0)
        h = 1e-5
        for case in range(100):
            depth = int(rng.integers(1, 4))
            sizes = [int(n) for n in rng.integers(1, 17, size=depth + 1)]
            sizes[-1] = 1
            net = MLP(sizes, rng)
            batch = int(rng.integers(1, 9))
            x = rng.normal(size=(batch, sizes[0]))
            y = rng.normal(size=(batch, 1))
            out, cache = net.forward(x)
            grads, _ = net.backward(cache, (out - y) / batch)
            with self.subTest(case=case, sizes=sizes):
                for p, g in zip(net.params, grads):
                    numeric = np.zeros_like(p)
                    for j in range(p.size):
                        saved = p.flat[j]
                        p.flat[j] = saved + h
                        ahead = _critic_loss(net, x, y)
                        p.flat[j] = saved - h
                        behind = _critic_loss(net, x, y)
                        p.flat[j] = saved
                        numeric.flat[j] = (ahead - behind) / (2 * h)
                    assert_allclose(g, numeric, rtol=1e-3, atol=1e-7)

    def test_finite_input_gives_finite_output(self):
        net = MLP([5, 8, 3], np.random.default_rng(1))
        self.assertTrue(np.all(np.isfinite(net(np.full((4, 5), 1e6)))))


class DropoutTests(SimpleTestCase):
    def test_rescaled_mask_is_unbiased(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(1.0, 2.0, size=10)
        dropped = input_dropout(np.tile(x, (100_000, 1)), 0.1, rng)
        assert_allclose(dropped.mean(axis=0), x, rtol=0.01)

    def test_zero_rate_is_identity(self):
        x = np.arange(4.0)
        self.assertIs(input_dropout(x, 0.0, np.random.default_rng()), x)

    def test_evaluation_ignores_dropout(self):
        config = TrainConfig(**TINY)
        plain = SoftActorCritic(6, 2, config, np.random.default_rng(3))
        dropped = SoftActorCritic(6, 2, config, np.random.default_rng(4), dropout_rate=0.5)
        dropped.actor.load(plain.actor.params)
        obs = np.random.default_rng(5).normal(size=(7, 6))
        assert_array_equal(plain.policy(obs, deterministic=True), dropped.policy(obs, deterministic=True))

    def test_rate_must_be_below_one(self):
        with self.assertRaises(LearnerError):
            SoftActorCritic(3, 1, TrainConfig(**TINY), dropout_rate=1.0)


class AgentTests(SimpleTestCase):
    def setUp(self):
        self.config = TrainConfig(**TINY)
        self.agent = SoftActorCritic(4, 2, self.config, np.random.default_rng(6))
        rng = np.random.default_rng(7)
        n = 32
        self.batch = (rng.normal(size=(n, 4)), rng.uniform(-1, 1, size=(n, 2)), rng.normal(size=n),
                      rng.normal(size=(n, 4)), np.zeros(n))

    def test_target_networks_track_online_weights(self):
        before = [[p.copy() for p in t.params] for t in self.agent.targets]
        self.agent.update(self.batch)
        tau = self.config.tau
        for critic, target, old in zip(self.agent.critics, self.agent.targets, before):
            for p, t, o in zip(critic.params, target.params, old):
                assert_array_equal(t, (1.0 - tau) * o + tau * p)

    def test_alpha_grows_when_entropy_is_below_target(self):
        actor = self.agent.actor
        last = actor.n_layers - 1
        actor.weight(last)[:, 2:] = 0.0
        actor.bias(last)[2:] = -5.0
        start = self.agent.alpha
        stats = self.agent.update(self.batch)
        self.assertLess(stats["entropy"], self.agent.entropy_target)
        self.assertGreater(self.agent.alpha, start)

    def test_sampled_actions_stay_in_bounds(self):
        obs = np.tile(np.random.default_rng(8).normal(size=4), (10_000, 1))
        actions = self.agent.policy(obs)
        self.assertTrue(np.all(np.abs(actions) <= 1.0))

    def test_losses_are_finite(self):
        stats = self.agent.update(self.batch)
        self.assertTrue(all(np.isfinite(v) for v in stats.values()))
        self.assertGreater(stats["alpha"], 0.0)


class TargetEntropyTests(SimpleTestCase):
    def test_negative_action_dim(self):
        self.assertEqual(target_entropy(3), -3.0)
        self.assertEqual(target_entropy(1), -1.0)

    def test_rejects_empty_action(self):
        with self.assertRaises(LearnerError):
            target_entropy(0)


class ReplayBufferTests(SimpleTestCase):
    def test_fifo_eviction(self):
        buffer = ReplayBuffer(3, 2, 1, np.random.default_rng(0))
        for i in range(5):
            buffer.push(np.full(2, i), np.zeros(1), float(i), np.full(2, i + 1), False)
        self.assertEqual(len(buffer), 3)
        self.assertEqual(sorted(buffer.rewards.tolist()), [2.0, 3.0, 4.0])

    def test_samples_only_stored_transitions(self):
        buffer = ReplayBuffer(10, 1, 1, np.random.default_rng(1))
        for i in range(4):
            buffer.push(np.array([i]), np.zeros(1), float(i), np.array([i]), False)
        _, _, rewards, _, _ = buffer.sample(200)
        self.assertTrue(set(rewards.tolist()) <= {0.0, 1.0, 2.0, 3.0})

    def test_empty_buffer(self):
        with self.assertRaises(IndexError):
            ReplayBuffer(4, 1, 1).sample(1)


class TrainingTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.env = CartDoublePendulumEnv()
        cls.model = train(cls.env, preset("Ours", cls.env), steps=300, config=TrainConfig(**TINY), seed=0)

    def test_history_and_ranges(self):
        steps = [s for s, _ in self.model.reward_history]
        self.assertTrue(steps)
        self.assertEqual(steps, sorted(set(steps)))
        self.assertTrue(all(c.has_range for c in self.model.space.channels))
        self.assertGreater(self.model.alpha, 0.0)

    def test_act_zero_policy(self):
        zeroed = SoftActorCritic(self.model.space.total_dim, 1, self.model.config)
        for p in zeroed.actor.params:
            p[...] = 0.0
        self.model.agent, original = zeroed, self.model.agent
        try:
            assert_array_equal(act(self.model, np.ones(self.model.space.total_dim)), [0.0])
        finally:
            self.model.agent = original

    def test_act_is_repeatable_and_checks_dimension(self):
        obs = np.linspace(-1, 1, self.model.space.total_dim)
        assert_array_equal(act(self.model, obs), act(self.model, obs))
        with self.assertRaises(LearnerError):
            act(self.model, np.zeros(self.model.space.total_dim + 1))

    def test_evaluate_is_repeatable(self):
        self.assertEqual(evaluate(self.model, self.env, 2), evaluate(self.model, self.env, 2))

    def test_constant_channel_override_changes_nothing(self):
        z = self.model.space.channel("z")
        assert_array_equal(z.low, z.high)
        override = ChannelOverride("z", RangeSampler(z))
        self.assertEqual(evaluate(self.model, self.env, 2, override), evaluate(self.model, self.env, 2))

    def test_unknown_override_channel(self):
        with self.assertRaises(ChannelConfigError):
            evaluate(self.model, self.env, 1, ChannelOverride("C_3", lambda rng: np.zeros(2)))

    def test_checkpoint_restores_policy(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(self.model, Path(tmp) / "model.bin")
            restored = load_checkpoint(path, self.env)
            history = export_reward_history(self.model, Path(tmp) / "history.csv")
            self.assertEqual(history.read_text().splitlines()[0], "step,return")
        obs = np.linspace(-1, 1, self.model.space.total_dim)
        assert_array_equal(act(restored, obs), act(self.model, obs))
        self.assertEqual(restored.reward_history, self.model.reward_history)
        self.assertEqual(restored.space.channel_names, self.model.space.channel_names)

    def test_steps_must_cover_warmup(self):
        with self.assertRaises(LearnerError):
            train(self.env, preset("RS", self.env), steps=50, config=TrainConfig(**TINY))

    def test_dropout_training_on_diagnostic_env(self):
        env = make_diagnostic_env(2, 1, False, seed=1)
        model = train(env, preset("MC", env), steps=200, config=TrainConfig(**TINY), dropout=0.1, seed=3)
        self.assertEqual(model.dropout_rate, 0.1)
        self.assertTrue(np.isfinite(evaluate(model, env, 1)))


class TrainConfigTests(SimpleTestCase):
    def test_pendulum_uses_small_networks(self):
        self.assertEqual(TrainConfig.for_env("pendulum").hidden_sizes, (64, 64))
        self.assertEqual(TrainConfig.for_env("hopper").hidden_sizes, (256, 256))
        self.assertEqual(TrainConfig().learning_rate, 0.003)

    def test_invalid_values(self):
        with self.assertRaises(LearnerError):
            TrainConfig(gamma=1.0)
        with self.assertRaises(LearnerError):
            TrainConfig(batch_size=0)

    def test_serializer(self):
        serializer = TrainConfigSerializer(data={"gamma": 1.5})
        self.assertFalse(serializer.is_valid())
        self.assertIn("gamma", serializer.errors)
        serializer = TrainConfigSerializer(data={"batch_size": 64}, context={"env_id": "pendulum"})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.save()
        self.assertEqual(config.batch_size, 64)
        self.assertEqual(config.hidden_sizes, (64, 64))
