import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_array_equal
from rest_framework.exceptions import ValidationError

from observations.exceptions import ChannelConfigError
from observations.models import ObservationSpace, PresetName
from observations.observation import (
    ObservationBuilder,
    RangeSampler,
    augment_history,
    build_observation,
    extract_channel,
    FrameHistory,
    update_ranges,
)
from observations.presets import RS_CHANNELS, preset, semantic_groups, space_from_names
from observations.serializer import ObservationSpaceSerializer, read_space_json, write_space_json
from envs.diagnostic import make_diagnostic_env
from envs.hopper import HopperEnv
from envs.pendulum import CartDoublePendulumEnv

BODIES = range(1, 5)
HOPPER_PRESETS = {
    PresetName.RS: set(RS_CHANNELS),
    PresetName.GC: {"q", "qdot"},
    PresetName.MC: {f"C_{i}" for i in BODIES} | {f"Cdot_{i}" for i in BODIES} | {f"r_{i}" for i in BODIES},
    PresetName.OAI: {"z", "theta", "q_jt", "qdot"},
    PresetName.RS_C: set(RS_CHANNELS) | {"contacts"},
    PresetName.RS_CP: set(RS_CHANNELS) | {f"C_{i}" for i in BODIES},
    PresetName.OURS: set(RS_CHANNELS) | {"z", "Cdot_1"},
    PresetName.OURS_X: set(RS_CHANNELS) | {"z", "Cdot_1", "x"},
}


class PresetTests(SimpleTestCase):
    def setUp(self):
        self.hopper = HopperEnv()

    def test_literal_channel_sets(self):
        for name, expected in HOPPER_PRESETS.items():
            with self.subTest(preset=name):
                space = preset(name, self.hopper)
                self.assertEqual(set(space.channel_names), expected)
                self.assertEqual(len(space.channel_names), len(expected))

    def test_hopper_dimensions(self):
        self.assertEqual(preset("RS", self.hopper).total_dim, 10)
        self.assertEqual(preset("Ours", self.hopper).total_dim, 13)
        self.assertEqual(preset("MC", self.hopper).total_dim, 20)
        self.assertEqual(preset("OAI", self.hopper).total_dim, 11)
        self.assertEqual(preset("OAI-2", self.hopper).total_dim, 25)
        self.assertEqual(preset("Ours-2", self.hopper).total_dim, 2 * 13 + 3)
        self.assertEqual(preset("RS-1", self.hopper).total_dim, 10)

    def test_channel_order_follows_registry(self):
        self.assertEqual(preset("Ours", self.hopper).channel_names, RS_CHANNELS + ["z", "Cdot_1"])

    def test_contacts_need_contact_sites(self):
        with self.assertRaisesMessage(ChannelConfigError, "no contact sites"):
            preset("RS+C", CartDoublePendulumEnv())

    def test_unknown_preset(self):
        for name in ("Best", "RS-0", "GC-2", ""):
            with self.subTest(name=name), self.assertRaises(ChannelConfigError):
                preset(name, self.hopper)

    def test_space_from_names(self):
        space = space_from_names(self.hopper, ["z", "q_jt", "z"], name="mine")
        self.assertEqual(space.channel_names, ["q_jt", "z"])
        with self.assertRaises(ChannelConfigError):
            space_from_names(self.hopper, ["wings"])

    def test_groups_partition_candidates(self):
        groups = semantic_groups(self.hopper)
        members = [m for g in groups for m in g.members]
        self.assertEqual(len(members), len(set(members)))
        registry = {c.name for c in self.hopper.channel_registry()}
        self.assertTrue(set(members) <= registry)
        self.assertNotIn("x", members)
        self.assertNotIn("random", members)
        with self.assertRaises(ChannelConfigError):
            semantic_groups(self.hopper, ["legs"])


class ObservationTests(SimpleTestCase):
    def test_translation_invariance(self):
        rng = np.random.default_rng(0)
        envs = [HopperEnv(), CartDoublePendulumEnv()]
        for case in range(1000):
            env = envs[case % 2]
            names = [c.name for c in env.channel_registry() if c.name != "x"]
            space = augment_history(space_from_names(env, names), 2)
            base = env.reset(case)
            qdot = rng.normal(size=base.q.shape)
            prev_vel = rng.normal(size=2)
            action = rng.uniform(-1.0, 1.0, size=env.spec.action_dim)
            shift = float(rng.uniform(-100.0, 100.0))
            shifted_q = base.q.copy()
            shifted_q[0] += shift

            observations = []
            for q in (base.q, shifted_q):
                env.rng = np.random.default_rng(case)
                state = env.make_state(q, qdot, 3, action, prev_vel)
                observations.append(build_observation(state, space, FrameHistory(space)))
            with self.subTest(case=case):
                self.assertEqual(observations[0].tobytes(), observations[1].tobytes())

    def test_raw_x_sees_the_shift(self):
        env = HopperEnv()
        state = env.reset(0)
        q = state.q.copy()
        q[0] += 2.0
        moved = env.make_state(q, state.qdot, 0, np.zeros(3))
        x = space_from_names(env, ["x"]).channel("x")
        self.assertEqual(extract_channel(moved, x)[0], q[0])

    def test_dimension_law(self):
        rng = np.random.default_rng(1)
        env = HopperEnv()
        registry = env.channel_registry()
        state = env.reset(0)
        for case in range(1000):
            count = int(rng.integers(1, len(registry) + 1))
            picked = [registry[i] for i in rng.choice(len(registry), size=count, replace=False)]
            n = int(rng.integers(1, 5))
            action_dim = int(rng.integers(0, 6))
            with_actions = bool(rng.integers(2))
            space = ObservationSpace(channels=picked, action_dim=action_dim, history_len=n,
                                     include_prev_actions=with_actions)
            frame = sum(c.dim for c in picked)
            expected = n * frame + ((n - 1) * action_dim if with_actions else 0)
            with self.subTest(case=case):
                self.assertEqual(space.total_dim, expected)
                self.assertEqual(build_observation(state, space, FrameHistory(space)).shape, (expected,))

    def test_history_length_through_an_episode(self):
        rng = np.random.default_rng(2)
        env = HopperEnv()
        for n in (1, 2, 3):
            space = augment_history(preset("Ours", env), n)
            builder = ObservationBuilder(space)
            state = env.reset(n)
            for _ in range(5):
                obs = builder.observe(state)
                self.assertEqual(obs.shape, (space.total_dim,))
                action = rng.uniform(-1.0, 1.0, size=3)
                builder.record_action(action)
                state = env.step(state, action).next_state

    def test_zero_padding_at_episode_start(self):
        env = HopperEnv()
        space = preset("Ours-2", env)
        builder = ObservationBuilder(space)
        state = env.reset(0)
        first = builder.observe(state)
        frame = build_observation(state, preset("Ours", env), FrameHistory(preset("Ours", env)))
        assert_array_equal(first[:13], frame)
        assert_array_equal(first[13:], np.zeros(16))

        action = np.array([0.1, -0.2, 0.3])
        builder.record_action(action)
        second = builder.observe(env.step(state, action).next_state)
        assert_array_equal(second[13:26], frame)
        assert_array_equal(second[26:], action)

    def test_augment_history(self):
        env = HopperEnv()
        rs = preset("RS", env)
        self.assertEqual(augment_history(rs, 1).total_dim, 10)
        doubled = augment_history(rs, 2)
        self.assertEqual(doubled.total_dim, 23)
        self.assertEqual(doubled.name, "RS-2")
        restored = augment_history(doubled, 1)
        self.assertEqual(restored.total_dim, 10)
        self.assertFalse(restored.include_prev_actions)
        self.assertEqual(rs.history_len, 1)
        with self.assertRaises(ChannelConfigError):
            augment_history(rs, 0)

    def test_missing_channel_in_state(self):
        hopper_channel = space_from_names(HopperEnv(), ["C_2"]).channel("C_2")
        state = make_diagnostic_env(2, 2, False).reset(0)
        with self.assertRaises(ChannelConfigError):
            extract_channel(state, hopper_channel)

    def test_duplicate_channels_rejected(self):
        z = space_from_names(HopperEnv(), ["z"]).channel("z")
        with self.assertRaises(ChannelConfigError):
            ObservationSpace(channels=[z, z.copy()], action_dim=3)


class RangeTests(SimpleTestCase):
    def setUp(self):
        self.space = space_from_names(HopperEnv(), ["z"])

    def test_envelope(self):
        update_ranges(self.space, np.array([0.5]))
        update_ranges(self.space, np.array([-1.0]))
        self.assertEqual(self.space.channel("z").range_pairs(), [(-1.0, 0.5)])
        update_ranges(self.space, np.array([0.0]))
        self.assertEqual(self.space.channel("z").range_pairs(), [(-1.0, 0.5)])

    def test_constant_channel(self):
        for _ in range(3):
            update_ranges(self.space, np.array([0.25]))
        sampler = RangeSampler(self.space.channel("z"))
        self.assertEqual(sampler(np.random.default_rng(0))[0], 0.25)

    def test_no_range_yet(self):
        self.assertIsNone(self.space.channel("z").range_pairs())
        with self.assertRaises(ChannelConfigError):
            RangeSampler(self.space.channel("z"))

    def test_length_mismatch(self):
        with self.assertRaises(ChannelConfigError):
            update_ranges(self.space, np.zeros(2))

    def test_only_newest_frame_is_recorded(self):
        space = augment_history(self.space, 2)
        update_ranges(space, np.array([1.0, 9.0, 0.3, 0.3, 0.3]))
        self.assertEqual(space.channel("z").range_pairs(), [(1.0, 1.0)])

    def test_never_shrinks(self):
        rng = np.random.default_rng(3)
        space = preset("Ours", HopperEnv())
        lows, highs = None, None
        for _ in range(1000):
            update_ranges(space, rng.normal(scale=rng.uniform(0.1, 3.0), size=space.total_dim))
            new_lows = np.concatenate([c.low for c in space.channels])
            new_highs = np.concatenate([c.high for c in space.channels])
            if lows is not None:
                self.assertTrue(np.all(new_lows <= lows) and np.all(new_highs >= highs))
            lows, highs = new_lows, new_highs

    def test_union_keeps_recorded_ranges(self):
        env = HopperEnv()
        update_ranges(self.space, np.array([0.7]))
        grown = self.space.union([c for c in env.channel_registry() if c.name in ("Cdot_1", "z")])
        self.assertEqual(grown.channel_names, ["z", "Cdot_1"])
        self.assertEqual(grown.channel("z").range_pairs(), [(0.7, 0.7)])
        self.assertEqual(grown.without(["z"]).channel_names, ["Cdot_1"])


class SpaceSerializerTests(SimpleTestCase):
    def setUp(self):
        self.env = HopperEnv()

    def test_round_trip_keeps_ranges(self):
        space = preset("Ours-2", self.env)
        rng = np.random.default_rng(4)
        for _ in range(5):
            update_ranges(space, rng.normal(size=space.total_dim))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_space_json(space, Path(tmp) / "space.json")
            loaded = read_space_json(path, self.env)
        self.assertEqual(loaded.name, "Ours-2")
        self.assertEqual(loaded.total_dim, space.total_dim)
        self.assertEqual(loaded.channel_names, space.channel_names)
        self.assertTrue(loaded.include_prev_actions)
        for name in space.channel_names:
            self.assertEqual(loaded.channel(name).range_pairs(), space.channel(name).range_pairs())

    def test_unrecorded_range_is_null(self):
        data = ObservationSpaceSerializer(preset("RS", self.env)).data
        self.assertTrue(all(c["range"] is None for c in data["channels"]))

    def test_rejects_inconsistent_documents(self):
        good = dict(ObservationSpaceSerializer(preset("RS", self.env)).data)
        cases = {
            "unknown channel": {**good, "channels": [{"name": "wings", "group": "extra", "dim": 1}]},
            "wrong dim": {**good, "channels": [{"name": "z", "group": "root-position", "dim": 2}]},
            "duplicate": {**good, "channels": [{"name": "z", "group": "root-position", "dim": 1}] * 2},
            "bad range": {**good, "channels": [{"name": "z", "group": "root-position", "dim": 1,
                                               "range": [[1.0, 0.0]]}]},
            "zero history": {**good, "history_len": 0},
        }
        for label, data in cases.items():
            serializer = ObservationSpaceSerializer(data=data, context={"env": self.env})
            with self.subTest(case=label), self.assertRaises(ValidationError):
                serializer.is_valid(raise_exception=True)
