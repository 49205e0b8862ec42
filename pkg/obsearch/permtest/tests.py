import tempfile
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from observations.presets import preset, space_from_names
from envs.diagnostic import make_diagnostic_env
from learner.exceptions import TrainingDiverged
from learner.models import TrainConfig
from permtest.exceptions import PermTestError
from permtest.importance import classify, compute_importance, dropout_sweep, prune, run_permtest
from permtest.models import ImportanceReport, PermTestConfig, SweepResult, Verdict
from permtest.plots import heatmap_export, sweep_heatmap_export
from permtest.serializer import PermTestConfigSerializer


def _report(importances, threshold=0.05):
    return ImportanceReport(
        base_score=10.0,
        importances=dict(importances),
        verdicts={n: classify(v, threshold) for n, v in importances.items()},
        dropout_rate=0.1,
        threshold=threshold,
    )


class StubTrainer:
    """Records ranges like a real run and reports a dropout-dependent return."""

    def __init__(self):
        self.calls = []

    def __call__(self, env, space, steps, config, dropout=0.0, seed=0):
        self.calls.append((steps, dropout, seed))
        for channel in space.channels:
            channel.record(np.zeros(channel.dim))
            channel.record(np.ones(channel.dim))
        return SimpleNamespace(space=space, reward_history=[(steps, 100.0 * (1.0 - dropout))])


def stub_evaluator(model, env, episodes, override=None):
    # signal_0 matters, deceptive hurts, noise does nothing
    if override is None:
        return 10.0
    return {"signal_0": 4.0, "signal_1": 8.0, "deceptive": 12.0}.get(override.channel, 10.0)


class ImportanceTests(SimpleTestCase):
    def test_relative_change(self):
        self.assertAlmostEqual(compute_importance(8.0, 10.0), -0.2)
        self.assertAlmostEqual(compute_importance(12.0, 10.0), 0.2)

    def test_non_positive_base_keeps_sign(self):
        self.assertAlmostEqual(compute_importance(-3.0, -1.0), -1.0)
        self.assertAlmostEqual(compute_importance(1.0, -1.0), 1.0)
        self.assertAlmostEqual(compute_importance(0.5, 0.0), 0.5)

    def test_verdict_thresholds(self):
        self.assertEqual(classify(-0.3, 0.05), Verdict.ESSENTIAL)
        self.assertEqual(classify(-0.05, 0.05), Verdict.ESSENTIAL)
        self.assertEqual(classify(0.0, 0.05), Verdict.NEUTRAL)
        self.assertEqual(classify(0.2, 0.05), Verdict.MALICIOUS)


class RunPermTestTests(SimpleTestCase):
    def setUp(self):
        self.env = make_diagnostic_env(2, 2, True)
        self.space = space_from_names(self.env, ["signal_0", "signal_1", "noise_0", "noise_1", "deceptive"])
        self.config = PermTestConfig(eval_episodes=3)

    def test_verdicts_from_scores(self):
        trainer = StubTrainer()
        report = run_permtest(self.env, self.space, self.config, seed=4, steps=500,
                              trainer=trainer, evaluator=stub_evaluator)
        self.assertEqual(trainer.calls, [(500, 0.1, 4)])
        self.assertEqual(report.channels, self.space.channel_names)
        self.assertEqual(report.verdicts["signal_0"], Verdict.ESSENTIAL)
        self.assertEqual(report.verdicts["signal_1"], Verdict.ESSENTIAL)
        self.assertEqual(report.verdicts["noise_0"], Verdict.NEUTRAL)
        self.assertEqual(report.verdicts["deceptive"], Verdict.MALICIOUS)
        self.assertAlmostEqual(report.importances["signal_0"], -0.6)
        self.assertAlmostEqual(report.aux_return, 90.0)
        self.assertEqual(report.aux_history, [(500, 90.0)])

    def test_caller_space_is_not_mutated(self):
        run_permtest(self.env, self.space, self.config, steps=10, trainer=StubTrainer(), evaluator=stub_evaluator)
        self.assertFalse(any(c.has_range for c in self.space.channels))

    def test_needs_training_length(self):
        with self.assertRaises(PermTestError):
            run_permtest(self.env, self.space, self.config, trainer=StubTrainer(), evaluator=stub_evaluator)

    def test_failed_training(self):
        def diverging(*args, **kwargs):
            raise TrainingDiverged(0, 7)

        with self.assertRaises(PermTestError):
            run_permtest(self.env, self.space, self.config, steps=10, trainer=diverging, evaluator=stub_evaluator)

    def test_ignored_channel_scores_zero(self):
        report = run_permtest(self.env, self.space, self.config, steps=10, trainer=StubTrainer(),
                              evaluator=lambda model, env, episodes, override=None: 7.5)
        self.assertTrue(all(v == 0.0 for v in report.importances.values()))

    def test_short_real_run_covers_every_channel(self):
        config = PermTestConfig(eval_episodes=1, aux_train_steps=150,
                                train=TrainConfig(hidden_sizes=(8,), batch_size=16, warmup_steps=50))
        env = make_diagnostic_env(1, 1, False, horizon=20)
        space = preset("MC", env)
        report = run_permtest(env, space, config, seed=1)
        self.assertEqual(sorted(report.importances), sorted(space.channel_names))
        self.assertEqual(set(report.verdicts), set(report.importances))

    def test_sweep_runs_each_rate(self):
        trainer = StubTrainer()
        result = dropout_sweep(self.env, self.space, [0.3, 0.1, 0.01], self.config, steps=10,
                               trainer=trainer, evaluator=stub_evaluator)
        self.assertEqual(result.rates, [0.3, 0.1, 0.01])
        self.assertEqual([c[1] for c in trainer.calls], [0.3, 0.1, 0.01])
        returns = result.aux_returns()["aux_return"].tolist()
        self.assertLess(returns[0], returns[-1])
        self.assertEqual(result.importance_matrix().shape, (5, 3))


class PruneTests(SimpleTestCase):
    def setUp(self):
        self.env = make_diagnostic_env(2, 2, True)
        self.space = space_from_names(self.env, ["signal_0", "signal_1", "noise_0", "deceptive"])

    def test_all_essential_is_identity(self):
        report = _report({n: -0.5 for n in self.space.channel_names})
        self.assertEqual(prune(self.space, report).channel_names, self.space.channel_names)

    def test_removes_neutral_and_malicious(self):
        report = _report({"signal_0": -0.4, "signal_1": -0.3, "noise_0": 0.01, "deceptive": 0.3})
        pruned = prune(self.space, report)
        self.assertEqual(pruned.channel_names, ["signal_0", "signal_1"])
        self.assertEqual(pruned.total_dim, 2)

    def test_keeps_most_essential_when_nothing_qualifies(self):
        report = _report({"signal_0": 0.01, "signal_1": -0.02, "noise_0": 0.0, "deceptive": 0.4})
        with self.assertLogs("permtest.importance", level="WARNING"):
            pruned = prune(self.space, report)
        self.assertEqual(pruned.channel_names, ["signal_1"])

    def test_incomplete_report(self):
        with self.assertRaises(PermTestError):
            prune(self.space, _report({"signal_0": -1.0}))

    def test_idempotent_and_subset(self):
        rng = np.random.default_rng(0)
        names = self.space.channel_names
        for case in range(1000):
            report = _report(dict(zip(names, rng.uniform(-0.2, 0.2, size=len(names)))))
            once = prune(self.space, report)
            with self.subTest(case=case):
                self.assertEqual(prune(once, report).channel_names, once.channel_names)
                self.assertTrue(set(once.channel_names) <= set(names))
                self.assertGreaterEqual(len(once), 1)


class ExportTests(SimpleTestCase):
    def test_heatmap_rows_and_image(self):
        report = _report({"a": -0.3, "b": 0.0, "c": 0.2})
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, image_path = heatmap_export(report, Path(tmp) / "importance.csv")
            frame = pd.read_csv(csv_path)
            self.assertTrue(image_path.exists())
        self.assertEqual(frame["verdict"].tolist(), ["essential", "neutral", "malicious"])
        self.assertEqual(frame.columns.tolist(), ["channel", "importance", "verdict"])

    def test_empty_report_writes_header_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertLogs("permtest.plots", level="WARNING"):
                csv_path, image_path = heatmap_export(_report({}), Path(tmp) / "importance.csv")
            self.assertEqual(csv_path.read_text().strip(), "channel,importance,verdict")
        self.assertIsNone(image_path)

    def test_sweep_export(self):
        reports = [_report({"a": -0.3, "b": 0.1}), _report({"a": -0.1, "b": 0.0})]
        reports[1].dropout_rate = 0.3
        with tempfile.TemporaryDirectory() as tmp:
            paths = sweep_heatmap_export(SweepResult(reports), tmp)
            self.assertTrue(all(p.exists() for p in paths.values()))
            grid = pd.read_csv(paths["importance"], index_col="channel")
        self.assertEqual(grid.shape, (2, 2))


class ConfigTests(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        serializer = PermTestConfigSerializer(data={})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.save()
        self.assertEqual(config.dropout_rate, 0.1)
        self.assertEqual(config.eval_episodes, 100)
        self.assertEqual(config.keep_threshold, 0.05)
        self.assertEqual(serializer.validated_data.get("sweep_rates"), [0.3, 0.1, 0.05, 0.01])

    def test_rejects_bad_values(self):
        serializer = PermTestConfigSerializer(data={"dropout_rate": 1.0, "keep_threshold": 0})
        self.assertFalse(serializer.is_valid())
        self.assertEqual(set(serializer.errors), {"dropout_rate", "keep_threshold"})

    def test_dataclass_validation(self):
        with self.assertRaises(PermTestError):
            PermTestConfig(dropout_rate=-0.1)
