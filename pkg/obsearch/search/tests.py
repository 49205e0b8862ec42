import json
import tempfile
from pathlib import Path
from types import SimpleNamespace

import numpy as np
from django.test import SimpleTestCase

from observations.presets import preset, semantic_groups, space_from_names
from envs.diagnostic import make_diagnostic_env
from envs.hopper import HopperEnv
from learner.exceptions import TrainingDiverged
from learner.models import TrainConfig
from permtest.importance import classify
from permtest.models import ImportanceReport, PermTestConfig
from search.algorithm import accept, iteration_seed, propose, run_search, score
from search.exceptions import GroupsExhausted
from search.models import Grouping, Metric, SearchConfig
from search.serializer import SearchConfigSerializer, read_trace


class ScoringTrainer:
    def __init__(self, score_fn):
        self.score_fn = score_fn
        self.seeds = []

    def __call__(self, env, space, steps, config, dropout=0.0, seed=0):
        self.seeds.append(seed)
        return SimpleNamespace(space=space, steps=steps, reward_history=[(steps, self.score_fn(space))])


def _signals(space):
    return sum(n.startswith("signal") for n in space.channel_names)


def _report_for(space, importance_fn, threshold=0.05):
    importances = {n: importance_fn(n) for n in space.channel_names}
    return ImportanceReport(base_score=1.0, importances=importances,
                            verdicts={n: classify(v, threshold) for n, v in importances.items()},
                            dropout_rate=0.1, threshold=threshold)


def noise_is_neutral(env, space, config, seed=0, steps=None):
    return _report_for(space, lambda n: 0.0 if n.startswith("noise") else -0.5)


class AcceptScoreTests(SimpleTestCase):
    def test_accept_is_strict(self):
        self.assertFalse(accept(10.0, 10.0))
        self.assertTrue(accept(10.1, 10.0))
        self.assertFalse(accept(float("-inf"), 3.0))
        self.assertFalse(accept(float("-inf"), float("-inf")))

    def test_history_metrics(self):
        model = SimpleNamespace(steps=6, reward_history=[(1, 10.0), (2, 20.0), (3, 30.0), (4, 40.0)])
        self.assertEqual(score(model, Metric.ALL), 25.0)
        self.assertEqual(score(model, Metric.HALF), 35.0)

    def test_empty_window(self):
        model = SimpleNamespace(steps=100, reward_history=[(10, 5.0)])
        self.assertEqual(score(model, Metric.HALF), float("-inf"))
        self.assertEqual(score(SimpleNamespace(steps=1, reward_history=[]), Metric.ALL), float("-inf"))

    def test_test_metric_evaluates(self):
        calls = []

        def evaluator(model, env, episodes):
            calls.append(episodes)
            return 4.5

        self.assertEqual(score(SimpleNamespace(), Metric.TEST, env=None, episodes=7, evaluator=evaluator), 4.5)
        self.assertEqual(calls, [7])

    def test_default_metric(self):
        self.assertEqual(SearchConfig().metric, Metric.ALL)

    def test_iteration_seed_is_stable(self):
        self.assertEqual(iteration_seed(3, 2), iteration_seed(3, 2))
        self.assertNotEqual(iteration_seed(3, 2), iteration_seed(3, 1))


class ProposeTests(SimpleTestCase):
    def setUp(self):
        self.env = HopperEnv()
        self.rs = preset("RS", self.env)
        self.groups = semantic_groups(self.env)

    def test_adds_one_semantic_group(self):
        self.assertEqual([g.name for g in self.groups], ["C1", "C1dot", "cartesian", "contact", "prev_action"])
        dims = {c.name: c.dim for c in self.env.channel_registry()}
        rng = np.random.default_rng(0)
        for _ in range(50):
            label, candidate = propose(self.env, self.rs, self.groups, rng)
            group = next(g for g in self.groups if g.name == label)
            added = [m for m in group.members if m not in self.rs]
            self.assertEqual(candidate.frame_dim, self.rs.frame_dim + sum(dims[m] for m in added))
            self.assertTrue(set(self.rs.channel_names) <= set(candidate.channel_names))

    def test_exhaustion(self):
        everything = self.rs.union([c for c in self.env.channel_registry()
                                    if any(c.name in g.members for g in self.groups)])
        with self.assertRaises(GroupsExhausted):
            propose(self.env, everything, self.groups, np.random.default_rng(0))

    def test_random_grouping_draws_unused_channels(self):
        rng = np.random.default_rng(1)
        mean_size = round(np.mean([len(g.members) for g in self.groups]))
        pool = {m for g in self.groups for m in g.members}
        for _ in range(50):
            label, candidate = propose(self.env, self.rs, self.groups, rng, Grouping.RANDOM)
            added = set(candidate.channel_names) - set(self.rs.channel_names)
            self.assertEqual(len(added), mean_size)
            self.assertTrue(added <= pool)
            self.assertTrue(label.startswith("random:"))


class RunSearchTests(SimpleTestCase):
    def setUp(self):
        self.env = make_diagnostic_env(2, 2, False)
        self.rs = preset("RS", self.env)

    def test_worse_proposals_keep_initial_space(self):
        trainer = ScoringTrainer(lambda s: 10.0 if s.channel_names == ["signal_0"] else 5.0)
        best, state = run_search(self.env, self.rs, SearchConfig(steps=100), seed=0,
                                 trainer=trainer, permtester=noise_is_neutral)
        self.assertEqual(best.channel_names, ["signal_0"])
        self.assertFalse(any(e.accepted for e in state.trace))
        self.assertEqual(len(state.trace), 5)
        self.assertEqual(state.stop_reason, "patience")
        self.assertEqual(state.best_score, 10.0)

    def test_relevant_group_is_accepted(self):
        trainer = ScoringTrainer(lambda s: 10.0 * _signals(s) - (len(s) - _signals(s)))
        best, state = run_search(self.env, self.rs, SearchConfig(steps=100, groups=["C1dot"]),
                                 trainer=trainer, permtester=noise_is_neutral)
        self.assertEqual(state.accepted_groups, ["C1dot"])
        self.assertEqual(best.channel_names, ["signal_0", "signal_1"])
        self.assertEqual(state.stop_reason, "exhausted")

    def test_prune_keeps_pre_prune_score(self):
        trainer = ScoringTrainer(lambda s: float(len(s)))
        best, state = run_search(self.env, self.rs, SearchConfig(steps=100, groups=["C1"]),
                                 trainer=trainer, permtester=noise_is_neutral)
        first = state.trace[0]
        self.assertTrue(first.accepted)
        self.assertEqual(first.pruned, ["noise_0"])
        self.assertEqual(state.best_score, 2.0)
        self.assertEqual(best.channel_names, ["signal_0"])
        self.assertFalse(any(e.accepted for e in state.trace[1:]))

    def test_deceptive_start_channel_is_pruned_on_acceptance(self):
        env = make_diagnostic_env(2, 2, True)
        start = space_from_names(env, ["signal_0", "deceptive"], name="with-deceptive")
        trainer = ScoringTrainer(lambda s: 10.0 * _signals(s))

        def deceptive_is_malicious(env, space, config, seed=0, steps=None):
            return _report_for(space, lambda n: 0.3 if n == "deceptive" else -0.5)

        best, state = run_search(env, start, SearchConfig(steps=100, groups=["C1dot"]),
                                 trainer=trainer, permtester=deceptive_is_malicious)
        first = state.trace[0]
        self.assertTrue(first.accepted)
        self.assertEqual(first.candidate_channels, ["signal_0", "signal_1", "deceptive"])
        self.assertEqual(first.pruned, ["deceptive"])
        self.assertEqual(best.channel_names, ["signal_0", "signal_1"])

    def test_prune_can_be_disabled(self):
        trainer = ScoringTrainer(lambda s: float(len(s)))
        best, state = run_search(self.env, self.rs, SearchConfig(steps=100, groups=["C1"], prune=False),
                                 trainer=trainer, permtester=noise_is_neutral)
        self.assertEqual(best.channel_names, ["signal_0", "noise_0"])
        self.assertEqual(state.trace[0].pruned, [])

    def test_training_seed_follows_iteration(self):
        trainer = ScoringTrainer(lambda s: 0.0)
        run_search(self.env, self.rs, SearchConfig(steps=100, patience=2), seed=5,
                   trainer=trainer, permtester=noise_is_neutral)
        self.assertEqual(trainer.seeds, [iteration_seed(5, i) for i in range(3)])

    def test_failed_trainings_never_win(self):
        def failing(env, space, steps, config, dropout=0.0, seed=0):
            if len(space) > 1:
                raise TrainingDiverged(seed, 1)
            return SimpleNamespace(space=space, steps=steps, reward_history=[(steps, -100.0)])

        best, state = run_search(self.env, self.rs, SearchConfig(steps=100), trainer=failing,
                                 permtester=noise_is_neutral)
        self.assertEqual(best.channel_names, ["signal_0"])
        self.assertTrue(all(e.score == float("-inf") and not e.accepted for e in state.trace))

    def test_adversarial_runs_terminate_with_monotone_acceptance(self):
        rng = np.random.default_rng(0)
        env = make_diagnostic_env(2, 3, False)
        start = preset("RS", env)

        def random_trainer(env, space, steps, config, dropout=0.0, seed=0):
            value = float("-inf") if rng.random() < 0.1 else float(rng.normal())
            return SimpleNamespace(space=space, steps=steps, reward_history=[(steps, value)])

        def random_permtester(env, space, config, seed=0, steps=None):
            return _report_for(space, lambda n: float(rng.uniform(-0.2, 0.2)))

        for case in range(1000):
            config = SearchConfig(steps=10, patience=int(rng.integers(1, 6)),
                                  grouping=Grouping.RANDOM if case % 2 else Grouping.SEMANTIC)
            best, state = run_search(env, start, config, seed=case, trainer=random_trainer,
                                     permtester=random_permtester)
            with self.subTest(case=case):
                self.assertLessEqual(len(state.trace), config.iteration_limit(4))
                accepted = [e.score for e in state.accepted]
                self.assertTrue(all(a < b for a, b in zip(accepted, accepted[1:])))
                if accepted:
                    self.assertGreater(accepted[0], state.baseline_score)
                    self.assertEqual(state.best_score, accepted[-1])
                for entry in state.accepted:
                    self.assertTrue(set(entry.pruned) <= set(entry.candidate_channels))
                self.assertGreaterEqual(len(best), 1)

    def test_trace_file(self):
        scores = iter([1.0, float("-inf"), 2.0, 0.5, 0.5, 0.5, 0.5, 0.5])
        trainer = ScoringTrainer(lambda s: next(scores))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "search-trace.jsonl"
            _, state = run_search(self.env, self.rs, SearchConfig(steps=10, prune=False), trace_path=path,
                                  trainer=trainer, permtester=noise_is_neutral)
            lines = path.read_text().splitlines()
            rows = read_trace(path)
        self.assertEqual(len(lines), len(state.trace))
        first = json.loads(lines[0])
        self.assertEqual(set(first), {"iter", "group", "candidate_channels", "score", "accepted",
                                      "pruned", "best_score"})
        self.assertIsNone(rows[0]["score"])
        self.assertEqual(rows[1]["score"], 2.0)
        self.assertTrue(rows[1]["accepted"])

    def test_short_real_search(self):
        env = make_diagnostic_env(2, 1, False, horizon=20)
        tiny = TrainConfig(hidden_sizes=(8,), batch_size=16, warmup_steps=50)
        config = SearchConfig(steps=120, groups=["C1dot"], train=tiny,
                              permtest=PermTestConfig(eval_episodes=1, train=tiny))
        best, state = run_search(env, preset("RS", env), config, seed=0)
        self.assertLessEqual(len(state.trace), config.iteration_limit(1))
        self.assertIn("signal_0", best.channel_names + [c for e in state.trace for c in e.pruned])


class SearchConfigTests(SimpleTestCase):
    def test_defaults_per_env(self):
        serializer = SearchConfigSerializer(data={}, context={"env_id": "pendulum"})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.save()
        self.assertEqual(config.steps, 30_000)
        self.assertEqual(config.metric, Metric.ALL)
        self.assertEqual(config.permtest.dropout_rate, 0.1)
        self.assertEqual(SearchConfig.for_env("hopper").steps, 200_000)

    def test_nested_train_config_reaches_permtest(self):
        serializer = SearchConfigSerializer(data={"steps": 500, "train": {"batch_size": 8}})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.save()
        self.assertEqual(config.train.batch_size, 8)
        self.assertIs(config.permtest.train, config.train)

    def test_rejects_unknown_group(self):
        serializer = SearchConfigSerializer(data={"groups": ["legs"]})
        self.assertFalse(serializer.is_valid())
        self.assertIn("groups", serializer.errors)

    def test_iteration_limit(self):
        self.assertEqual(SearchConfig().iteration_limit(5), 15)
        self.assertEqual(SearchConfig(max_iterations=4).iteration_limit(5), 4)

