import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
import pandas as pd
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from observations.exceptions import ChannelConfigError
from observations.observation import ChannelOverride, ObservationBuilder, RangeSampler, update_ranges
from observations.presets import preset
from envs.diagnostic import ACTION_GAIN, DECEPTIVE_STEPS, make_diagnostic_env
from envs.exceptions import EnvError
from envs.hopper import CONTACT_THRESHOLD, HopperEnv
from envs.models import DoneReason, EnvId
from envs.pendulum import POLE_LENGTH, CartDoublePendulumEnv
from envs.registry import make_env
from envs.rollout import dump_trajectory, rollout


def controlled_return(env, space, override=None, episodes=100, record_ranges=False):
    """Mean return of a deadbeat controller that reads the core off the signal channels of ``space``."""
    builder = ObservationBuilder(space, override, np.random.default_rng(0))
    slices = [space.frame_slices()[name] for name in env.relevant_channels]
    gains = -env.growth / ACTION_GAIN
    returns = []
    for episode in range(episodes):
        state, total = env.reset(episode), 0.0
        builder.reset()
        while True:
            obs = builder.observe(state)
            if record_ranges:
                update_ranges(space, obs)
            core = np.concatenate([obs[sl] for sl in slices])
            transition = env.step(state, np.clip(gains * core, -1.0, 1.0))
            total += transition.reward
            if transition.done:
                break
            state = transition.next_state
        returns.append(total)
    return float(np.mean(returns))


class ResetTests(SimpleTestCase):
    def test_same_seed_same_state(self):
        env = CartDoublePendulumEnv()
        a, b = env.reset(7), env.reset(7)
        assert_array_equal(a.q, b.q)
        assert_array_equal(a.qdot, b.qdot)

    def test_perturbation_stays_small(self):
        env = CartDoublePendulumEnv()
        for seed in range(50):
            state = env.reset(seed)
            self.assertLessEqual(np.max(np.abs(state.q)), 0.005)
            self.assertLessEqual(np.max(np.abs(state.qdot)), 0.005)

    def test_hopper_starts_on_the_ground(self):
        env = HopperEnv()
        for seed in range(20):
            assert_array_equal(env.reset(seed).contacts, [1])


class StepTests(SimpleTestCase):
    def test_upright_equilibrium_holds(self):
        env = CartDoublePendulumEnv()
        state = env.make_state(np.zeros(3), np.zeros(3), 0, np.zeros(1))
        for _ in range(10):
            state = env.step(state, np.zeros(1)).next_state
        deviation = np.linalg.norm(env.tip(state.q) - np.array([0.0, 2 * POLE_LENGTH]))
        self.assertLess(deviation, 1e-3)

    def test_out_of_bounds_action_is_clamped(self):
        env = CartDoublePendulumEnv()
        state = env.reset(3)
        wild = env.step(state, np.array([5.0]))
        clamped = env.step(state, np.array([1.0]))
        assert_array_equal(wild.next_state.q, clamped.next_state.q)
        assert_array_equal(wild.next_state.qdot, clamped.next_state.qdot)
        self.assertEqual(wild.reward, clamped.reward)

    def test_wrong_action_size_is_rejected(self):
        env = CartDoublePendulumEnv()
        with self.assertRaises(EnvError):
            env.step(env.reset(0), np.zeros(2))

    def test_horizon_ends_episode(self):
        env = CartDoublePendulumEnv(horizon=5)
        transitions = rollout(env, seed=0)
        self.assertLessEqual(len(transitions), 5)
        self.assertTrue(transitions[-1].done)
        if len(transitions) == 5:
            self.assertEqual(transitions[-1].done_reason, DoneReason.HORIZON)

    def test_hopper_at_rest_stays_in_contact(self):
        env = HopperEnv()
        state = env.make_state(env.nominal_q(), np.zeros(env.chain.n_q), 0, np.zeros(3))
        for _ in range(10):
            transition = env.step(state, np.zeros(3))
            state = transition.next_state
            assert_array_equal(state.contacts, [1])
        self.assertLess(abs(state.com_vel[0, 0]), 0.05)

    def test_non_finite_integration_ends_with_failure(self):
        env = HopperEnv()
        state = env.reset(0)
        nan = np.full(env.chain.n_q, np.nan)
        with mock.patch.object(env, "integrate", return_value=(nan, nan)):
            transition = env.step(state, np.zeros(3))
        self.assertTrue(transition.done)
        self.assertEqual(transition.done_reason, DoneReason.FAILURE)
        self.assertEqual(transition.reward, 0.0)
        self.assertTrue(transition.next_state.is_finite())

    def test_rollout_keeps_kinematics_consistent(self):
        env = HopperEnv()
        rng = np.random.default_rng(0)
        state = env.reset(1)
        for _ in range(30):
            transition = env.step(state, rng.uniform(-1, 1, size=3))
            state = transition.next_state
            kin = env.body_kinematics(state.q, state.qdot)
            assert_allclose(kin.com_pos, state.com_pos, rtol=1e-9, atol=1e-12)
            assert_allclose(kin.body_rot, state.body_rot, rtol=1e-9, atol=1e-12)
            self.assertTrue(set(state.contacts.tolist()) <= {0, 1})
            if transition.done:
                break


class KinematicsTests(SimpleTestCase):
    def test_zero_pose_offsets(self):
        env = CartDoublePendulumEnv()
        kin = env.body_kinematics(np.zeros(3))
        assert_allclose(kin.com_pos, [[0.0, 0.0], [0.0, 0.3], [0.0, 0.9]], atol=1e-12)

    def test_root_rotated_by_pi(self):
        env = HopperEnv()
        q = np.zeros(6)
        q[2] = np.pi
        kin = env.body_kinematics(q)
        self.assertAlmostEqual(kin.body_rot[0], np.pi)
        assert_allclose(kin.rotation_matrices[0], [[-1.0, 0.0], [0.0, -1.0]], atol=1e-12)

    def test_velocities_match_finite_differences(self):
        env = HopperEnv()
        rng = np.random.default_rng(4)
        h = 1e-6
        for _ in range(100):
            q, qdot = rng.uniform(-1, 1, size=6), rng.uniform(-1, 1, size=6)
            kin = env.body_kinematics(q, qdot)
            ahead = env.body_kinematics(q + h * qdot).com_pos
            behind = env.body_kinematics(q - h * qdot).com_pos
            assert_allclose(kin.com_vel, (ahead - behind) / (2 * h), atol=1e-6)

    def test_dimension_mismatch(self):
        with self.assertRaises(EnvError):
            HopperEnv().body_kinematics(np.zeros(4))

    def test_contact_flag_matches_foot_height(self):
        env = HopperEnv()
        rng = np.random.default_rng(9)
        for _ in range(200):
            q = env.nominal_q() + rng.uniform(-0.05, 0.05, size=6)
            height = min(pos[1] for pos, _ in env.foot_points(q))
            self.assertEqual(env.contact_flags(q)[0], int(height <= CONTACT_THRESHOLD))


class EnergyTests(SimpleTestCase):
    def test_unactuated_pendulum_conserves_energy(self):
        env = CartDoublePendulumEnv()
        q = np.array([0.0, np.pi - 0.3, 0.2])
        qdot = np.zeros(3)
        start = env.chain.energy(q, qdot)
        for _ in range(200):
            q, qdot = env.integrate(q, qdot, np.zeros(1))
            self.assertLess(abs(env.chain.energy(q, qdot) - start), 0.01 * abs(start))


class DiagnosticEnvTests(SimpleTestCase):
    def test_same_seed_same_rewards(self):
        actions = np.random.default_rng(0).uniform(-1, 1, size=(50, 2))
        runs = []
        for _ in range(2):
            env = make_diagnostic_env(2, 2, True, seed=5)
            state, rewards = env.reset(11), []
            for action in actions:
                transition = env.step(state, action)
                rewards.append(transition.reward)
                state = transition.next_state
                if transition.done:
                    break
            runs.append(rewards)
        self.assertEqual(runs[0], runs[1])

    def test_preset_analogs(self):
        env = make_diagnostic_env(2, 2, False)
        self.assertEqual(preset("RS", env).channel_names, ["signal_0"])
        self.assertEqual(preset("Ours", env).channel_names, ["signal_0", "signal_1"])
        self.assertEqual(preset("MC", env).total_dim, 4)
        with self.assertRaises(ChannelConfigError):
            preset("RS+C", env)
        with self.assertRaises(ChannelConfigError):
            preset("Ours+x", env)

    def test_deceptive_channel_reports_reward_to_go_then_accumulates(self):
        env = make_diagnostic_env(2, 0, True, seed=2)
        gains = -env.growth / ACTION_GAIN
        late = []
        for episode in range(30):
            state = env.reset(episode)
            self.assertEqual(state.extras["deceptive"][0], env.reward_to_go(state.q))
            while True:
                transition = env.step(state, np.clip(gains * state.q, -1.0, 1.0))
                after = transition.next_state
                value = after.extras["deceptive"][0]
                if after.t < DECEPTIVE_STEPS:
                    self.assertEqual(value, env.reward_to_go(after.q))
                else:
                    self.assertEqual(value, state.extras["deceptive"][0] + transition.reward)
                    late.append((value, env.reward_to_go(after.q)))
                if transition.done:
                    break
                state = after
        values, truth = np.array(late).T
        self.assertLess(abs(np.corrcoef(values, truth)[0, 1]), 0.1)
        self.assertGreater(values.max(), env.reward_to_go(np.zeros(2)))

    def test_permuted_noise_channel_leaves_return_unchanged(self):
        env = make_diagnostic_env(2, 2, False, seed=1)
        space = preset("MC", env)
        base = controlled_return(env, space, record_ranges=True)
        override = ChannelOverride("noise_0", RangeSampler(space.channel("noise_0")))
        permuted = controlled_return(env, space, override)
        self.assertGreater(base, 150.0)
        self.assertLess(abs(permuted - base), 0.02 * base)

    def test_zeroed_relevant_channel_halves_return(self):
        env = make_diagnostic_env(2, 2, False, seed=1)
        space = preset("MC", env)
        base = controlled_return(env, space)
        zeroed = controlled_return(env, space, ChannelOverride("signal_0", lambda rng: np.zeros(1)))
        self.assertLess(zeroed, 0.5 * base)

    def test_needs_a_relevant_dimension(self):
        with self.assertRaises(ChannelConfigError):
            make_diagnostic_env(0, 1, False)


class RegistryTests(SimpleTestCase):
    def test_known_ids(self):
        self.assertIsInstance(make_env("hopper"), HopperEnv)
        self.assertEqual(make_env(EnvId.DIAGNOSTIC, relevant_dims=3).spec.action_dim, 3)

    def test_unknown_id(self):
        with self.assertRaises(EnvError):
            make_env("walker")


class TrajectoryDumpTests(SimpleTestCase):
    def test_hopper_dump(self):
        expected = rollout(HopperEnv(), seed=3, max_steps=25)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "seed-0" / "trajectory.csv"
            dump_trajectory(HopperEnv(), path, seed=3, max_steps=25)
            frame = pd.read_csv(path, float_precision="round_trip")
        q_columns = [f"q_{i}" for i in range(6)]
        columns = (["t", "reward", "done_reason"] + q_columns + [f"qdot_{i}" for i in range(6)]
                   + ["a_0", "a_1", "a_2", "contact_0"])
        self.assertEqual(frame.columns.tolist(), columns)
        self.assertEqual(len(frame), len(expected))
        self.assertEqual(frame["t"].tolist(), [tr.next_state.t for tr in expected])
        self.assertEqual(frame["contact_0"].tolist(), [int(tr.next_state.contacts[0]) for tr in expected])
        self.assertEqual(frame["contact_0"].iloc[0], 1)
        assert_array_equal(frame[q_columns].to_numpy(), np.array([tr.next_state.q for tr in expected]))
        assert_array_equal(frame["reward"].to_numpy(), [tr.reward for tr in expected])

    def test_policy_drives_the_dump(self):
        env = make_diagnostic_env(1, 0, False)
        with tempfile.TemporaryDirectory() as tmp:
            frame = dump_trajectory(env, Path(tmp) / "diag.csv", policy=lambda state: np.array([0.5]),
                                    seed=0, max_steps=5)
        self.assertEqual(frame["a_0"].tolist(), [0.5] * len(frame))
        self.assertNotIn("contact_0", frame.columns)
