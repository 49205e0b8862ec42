import io
import json
import math
import tempfile
from pathlib import Path
from types import SimpleNamespace
from unittest import mock

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from numpy.testing import assert_allclose
from rest_framework.exceptions import ValidationError

from observations.presets import space_from_names
from harness.aggregate import aggregate_curves, bucket_curve, comparison_table, curve_auc, read_csv, write_aggregates
from harness.exceptions import AllSeedsFailed, HarnessError, RunExistsError
from harness.models import Stream, content_hash
from harness.report import run_report
from harness.runner import derive_seed, run_bench, run_permtest_cmd, run_search_cmd
from harness.serializer import ExperimentConfigSerializer, load_experiment_config
from learner.exceptions import TrainingDiverged
from permtest.importance import classify
from permtest.models import ImportanceReport, SweepResult
from search.models import SearchState, TraceEntry

TINY_TRAIN = {"hidden_sizes": [8], "batch_size": 16, "warmup_steps": 50}


def make_config(out, **overrides):
    data = {"command": "bench", "env": "diagnostic", "presets": ["RS", "Ours"], "steps": 2000, "seeds": 2,
            "out": str(out)}
    data.update(overrides)
    serializer = ExperimentConfigSerializer(data={k: v for k, v in data.items() if v is not None})
    if not serializer.is_valid():
        raise AssertionError(serializer.errors)
    return serializer.save()


def stub_train(env, space, steps, config=None, dropout=0.0, seed=0):
    rng = np.random.default_rng(seed)
    history = [(step, float(len(space) + rng.normal())) for step in range(250, steps + 1, 250)]
    return SimpleNamespace(space=space, steps=steps, reward_history=history)


def fake_search(env, init_space, config, seed=0, trace_path=None):
    best = space_from_names(env, ["signal_0", "signal_1"], name="found")
    entry = TraceEntry(1, "C1dot", best.channel_names, 3.0, True, [], 3.0)
    Path(trace_path).write_text("")
    return best, SearchState(best_obs=best, best_score=3.0, baseline_score=1.0, trace=[entry],
                             stop_reason="exhausted")


def fake_permtest(env, space, config, seed=0, steps=None):
    importances = {n: (-0.5 if n.startswith("signal") else 0.01) for n in space.channel_names}
    return ImportanceReport(
        base_score=1.0,
        importances=importances,
        verdicts={n: classify(v, config.keep_threshold) for n, v in importances.items()},
        dropout_rate=config.dropout_rate,
        threshold=config.keep_threshold,
        seed=seed,
        aux_return=1.0 - config.dropout_rate,
        aux_history=[(500, 1.0 - config.dropout_rate), (1500, 1.0 - config.dropout_rate)],
    )


def fake_sweep(env, space, rates, config, seed=0, steps=None):
    return SweepResult([fake_permtest(env, space, SimpleNamespace(dropout_rate=r, keep_threshold=0.05), seed)
                        for r in rates])


class SeedDerivationTests(SimpleTestCase):
    def test_stable_and_separated(self):
        self.assertEqual(derive_seed(0, 3, Stream.LEARNER), derive_seed(0, 3, Stream.LEARNER))
        seeds = {derive_seed(root, index, stream) for root in (0, 1) for index in range(10) for stream in Stream}
        self.assertEqual(len(seeds), 2 * 10 * len(Stream))

    def test_fits_numpy_seeding(self):
        seed = derive_seed(123, 0, Stream.SEARCH)
        self.assertTrue(0 <= seed < 2 ** 32)
        np.random.default_rng(seed)


class ExperimentConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def errors(self, **overrides):
        data = {"command": "bench", "env": "diagnostic", "presets": ["RS"], "out": str(self.out)}
        data.update(overrides)
        serializer = ExperimentConfigSerializer(data=data)
        self.assertFalse(serializer.is_valid())
        return serializer.errors

    def test_defaults(self):
        config = make_config(self.out, seeds=None, steps=None)
        self.assertEqual(config.seeds, 10)
        self.assertEqual(config.workers, 1)
        self.assertEqual(config.training_steps, 20_000)
        self.assertEqual(config.train.hidden_sizes, (256, 256))
        self.assertEqual(config.sweep_rates, [0.3, 0.1, 0.05, 0.01])

    def test_shipped_configs_load(self):
        directory = Path(settings.BASE_DIR) / "configs"
        paths = sorted(directory.glob("*.json"))
        self.assertTrue(paths)
        for path in paths:
            with self.subTest(config=path.name):
                config = load_experiment_config(path, out=str(self.out))
                self.assertEqual(config.command, json.loads(path.read_text())["command"])
        config = load_experiment_config(directory / "diagnostic-search-deceptive.json", out=str(self.out))
        start = config.initial_space(config.make_env())
        self.assertEqual(start.channel_names, ["signal_0", "deceptive"])
        self.assertTrue(config.search.prune)

    def test_pendulum_network_default(self):
        config = make_config(self.out, env="pendulum", presets=["RS"], train={"batch_size": 32})
        self.assertEqual(config.train.hidden_sizes, (64, 64))
        self.assertEqual(config.train.batch_size, 32)

    def test_rejections(self):
        self.assertIn("presets", self.errors(presets=[]))
        self.assertIn("presets", self.errors(presets=["RS", "Best"]))
        self.assertIn("presets", self.errors(presets=["RS+C"]))
        self.assertIn("env", self.errors(env="walker"))
        self.assertIn("env_options", self.errors(env_options={"relevant_dims": 0}))
        self.assertIn("env_options", self.errors(env_options={"legs": 2}))
        self.assertIn("seeds", self.errors(seeds=0))
        self.assertIn("steps", self.errors(steps=500))
        self.assertIn("channels", self.errors(command="permtest", channels=["signal_0", "x"]))
        self.assertIn("space", self.errors(command="search", space="Ours+x"))

    def test_search_section_inherits_train(self):
        config = make_config(self.out, command="search", train=TINY_TRAIN, steps=300)
        self.assertEqual(config.search.steps, 300)
        self.assertIs(config.search.train, config.train)
        self.assertIs(config.search.permtest.train, config.train)
        self.assertIs(config.permtest.train, config.train)

    def test_hash_ignores_placement(self):
        a = make_config(self.out, workers=1)
        b = make_config(self.out / "elsewhere", workers=4)
        c = make_config(self.out, seeds=3)
        self.assertEqual(a.config_hash, b.config_hash)
        self.assertNotEqual(a.config_hash, c.config_hash)
        self.assertRegex(a.config_hash, r"^[0-9a-f]{12}$")
        self.assertEqual(content_hash({"b": 1, "a": 2}), content_hash({"a": 2, "b": 1}))

    def test_load_with_overrides(self):
        path = self.out / "config.json"
        path.write_text(json.dumps({"command": "bench", "env": "diagnostic", "presets": ["RS"], "seeds": 5}))
        config = load_experiment_config(path, seeds=2, workers=None, out=str(self.out / "runs"))
        self.assertEqual(config.seeds, 2)
        self.assertEqual(config.out_dir, str(self.out / "runs"))
        path.write_text("[1, 2]")
        with self.assertRaises(ValidationError):
            load_experiment_config(path)
        with self.assertRaises(ValidationError):
            load_experiment_config(self.out / "missing.json")


class AggregateTests(SimpleTestCase):
    def test_bucketing(self):
        curve = pd.DataFrame({"step": [500, 900, 2500], "return": [1.0, 3.0, 5.0]})
        bucketed = bucket_curve(curve, 1000, last_step=4000)
        self.assertEqual(bucketed.index.tolist(), [1000, 2000, 3000, 4000])
        self.assertEqual(bucketed.tolist(), [2.0, 2.0, 5.0, 5.0])
        late = bucket_curve(pd.DataFrame({"step": [1500], "return": [1.0]}), 1000)
        self.assertTrue(math.isnan(late.iloc[0]))

    def test_single_seed_is_its_own_aggregate(self):
        curve = pd.DataFrame({"step": [1000, 2000, 3000], "return": [1.0, 2.0, 4.0]})
        frame = aggregate_curves({0: curve}, 1000)
        self.assertEqual(frame["mean"].tolist(), [1.0, 2.0, 4.0])
        self.assertEqual(frame["stderr"].tolist(), [0.0, 0.0, 0.0])
        self.assertEqual(frame["n"].tolist(), [1, 1, 1])

    def test_matches_recomputation(self):
        rng = np.random.default_rng(0)
        bucket, last = 1000, 5000
        for case in range(1000):
            per_seed = {}
            for seed in range(int(rng.integers(1, 5))):
                steps = np.sort(rng.choice(np.arange(1, last + 1), size=int(rng.integers(0, 8)), replace=False))
                per_seed[seed] = pd.DataFrame({"step": steps, "return": rng.normal(size=len(steps))})
            frame = aggregate_curves(per_seed, bucket, last)
            expected = _reference_aggregate(per_seed, bucket, last)
            with self.subTest(case=case):
                self.assertEqual(frame["step"].tolist(), [row[0] for row in expected])
                self.assertEqual(frame["n"].tolist(), [row[3] for row in expected])
                if expected:
                    assert_allclose(frame["mean"], [row[1] for row in expected], rtol=1e-12, atol=1e-12)
                    assert_allclose(frame["stderr"], [row[2] for row in expected], rtol=1e-12, atol=1e-12)

    def test_written_aggregates_read_back_exactly(self):
        rng = np.random.default_rng(5)
        with tempfile.TemporaryDirectory() as tmp:
            for case in range(200):
                steps = np.arange(1000, 6000, 1000)
                frame = pd.DataFrame({"step": steps, "mean": rng.normal(scale=10.0 ** rng.integers(-3, 4), size=5),
                                      "stderr": rng.random(5) / 7.0, "n": rng.integers(1, 11, size=5)})
                paths = write_aggregates({"RS": frame}, {"RS": 3}, tmp)
                written = read_csv(paths["aggregate"])
                per_label = read_csv(paths["curves:RS"])
                with self.subTest(case=case):
                    self.assertEqual(written["mean"].tolist(), frame["mean"].tolist())
                    self.assertEqual(written["stderr"].tolist(), frame["stderr"].tolist())
                    self.assertEqual(per_label.to_dict("list"), frame.to_dict("list"))

    def test_one_file_per_label(self):
        frame = pd.DataFrame({"step": [1000], "mean": [1.5], "stderr": [0.0], "n": [1]})
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_aggregates({"Ours+x": frame, "d=0.3": frame, "search": frame}, {}, tmp)
            names = sorted(p.name for key, p in paths.items() if key.startswith("curves:"))
            self.assertEqual(names, ["curves-Ours+x.csv", "curves-d=0.3.csv", "curves-search.csv"])
            self.assertTrue(all(p.exists() for p in paths.values()))

    def test_auc_and_comparison(self):
        frame = pd.DataFrame({"step": [1000, 2000, 3000], "mean": [0.0, 1.0, 2.0], "stderr": [0.0, 0.1, 0.2],
                              "n": [2, 2, 2]})
        self.assertAlmostEqual(curve_auc(frame), 2000.0)
        self.assertEqual(curve_auc(frame.iloc[:1]), 0.0)
        table = comparison_table({"RS": frame}, {"RS": 2})
        self.assertEqual(table.iloc[0].to_dict(), {"label": "RS", "seeds": 2, "final_mean": 2.0,
                                                   "final_stderr": 0.2, "auc": 2000.0})


def _reference_aggregate(per_seed, bucket, last):
    columns = []
    for curve in per_seed.values():
        values, current = [], float("nan")
        for b in range(1, last // bucket + 1):
            inside = [r for s, r in zip(curve["step"], curve["return"]) if (b - 1) * bucket < s <= b * bucket]
            if inside:
                current = float(np.mean(inside))
            values.append(current)
        columns.append(values)
    table = np.array(columns)
    rows = []
    for j in range(table.shape[1]):
        present = table[:, j][~np.isnan(table[:, j])]
        if len(present):
            stderr = float(np.std(present, ddof=1) / np.sqrt(len(present))) if len(present) > 1 else 0.0
            rows.append((bucket * (j + 1), float(np.mean(present)), stderr, len(present)))
    return rows


@mock.patch("harness.runner.train", stub_train)
class RunBenchTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_layout(self):
        config = make_config(self.out)
        record = run_bench(config)
        run_dir = self.out / "bench" / "diagnostic" / config.config_hash
        self.assertEqual(record.run_dir, run_dir)
        for name in ("metadata.json", "aggregate.csv", "comparison.csv", "curves.png"):
            self.assertTrue((run_dir / name).exists(), name)
        for seed in range(2):
            for name in ("metadata.json", "curves.csv", "space-RS.json", "space-Ours.json"):
                self.assertTrue((run_dir / f"seed-{seed}" / name).exists(), name)
        metadata = json.loads((run_dir / "metadata.json").read_text())
        self.assertEqual(metadata["config_hash"], config.config_hash)
        self.assertEqual(metadata["completed_seeds"], [0, 1])
        self.assertEqual(metadata["failed_seeds"], [])
        self.assertEqual(metadata["bucket_steps"], 1000)
        comparison = read_csv(run_dir / "comparison.csv")
        self.assertEqual(comparison["label"].tolist(), ["RS", "Ours"])
        self.assertTrue((comparison["final_mean"].to_numpy()[1] > comparison["final_mean"].to_numpy()[0]))

    def test_aggregate_matches_seed_files(self):
        config = make_config(self.out, presets=["RS"], seeds=3)
        record = run_bench(config)
        per_seed = {}
        for seed in range(3):
            frame = read_csv(record.run_dir / f"seed-{seed}" / "curves.csv")
            per_seed[seed] = frame[frame["label"] == "RS"][["step", "return"]]
        written = read_csv(record.run_dir / "aggregate.csv")
        expected = aggregate_curves(per_seed, 1000, config.training_steps)
        self.assertEqual(written["step"].tolist(), expected["step"].tolist())
        self.assertEqual(written["mean"].tolist(), expected["mean"].tolist())
        self.assertEqual(written["stderr"].tolist(), expected["stderr"].tolist())
        self.assertEqual(read_csv(record.run_dir / "curves-RS.csv")["mean"].tolist(), expected["mean"].tolist())

    def test_one_preset_one_seed(self):
        record = run_bench(make_config(self.out, presets=["RS"], seeds=1))
        aggregate = read_csv(record.run_dir / "aggregate.csv")
        curve = record.curves["RS"][0]
        self.assertEqual(aggregate["mean"].tolist(), bucket_curve(curve, 1000, 2000).tolist())

    def test_per_preset_curve_files(self):
        record = run_bench(make_config(self.out, seeds=2))
        aggregate = read_csv(record.run_dir / "aggregate.csv")
        for name in ("RS", "Ours"):
            per_preset = read_csv(record.run_dir / f"curves-{name}.csv")
            expected = aggregate[aggregate["label"] == name].drop(columns="label").reset_index(drop=True)
            self.assertEqual(per_preset.to_dict("list"), expected.to_dict("list"))

    def test_trajectory_dumps(self):
        with mock.patch("harness.runner.act", lambda model, obs: np.zeros(2)):
            record = run_bench(make_config(self.out, seeds=1, trajectories=True))
        for name in ("RS", "Ours"):
            frame = read_csv(record.run_dir / "seed-0" / f"trajectory-{name}.csv")
            self.assertEqual(frame["t"].tolist(), list(range(1, len(frame) + 1)))
            self.assertEqual(frame[["a_0", "a_1"]].abs().to_numpy().sum(), 0.0)
            self.assertTrue({"reward", "q_0", "q_1", "qdot_0", "qdot_1"} <= set(frame.columns))

    def test_no_trajectories_by_default(self):
        record = run_bench(make_config(self.out, seeds=1))
        self.assertEqual(list((record.run_dir / "seed-0").glob("trajectory-*.csv")), [])

    def test_refuses_to_overwrite(self):
        config = make_config(self.out, seeds=1)
        run_bench(config)
        with self.assertRaises(RunExistsError):
            run_bench(config)
        record = run_bench(config, force=True)
        self.assertEqual(record.completed_seeds, [0])

    def test_failed_seed_is_recorded(self):
        bad = derive_seed(0, 1, Stream.LEARNER)

        def flaky(env, space, steps, config=None, dropout=0.0, seed=0):
            if seed == bad:
                raise TrainingDiverged(seed, 7, "critic_loss=nan")
            return stub_train(env, space, steps, config, dropout, seed)

        with mock.patch("harness.runner.train", flaky), self.assertLogs("harness.runner", level="WARNING"):
            record = run_bench(make_config(self.out, seeds=2))
        self.assertEqual(record.completed_seeds, [0])
        self.assertEqual([(f["seed"], f["label"]) for f in record.failed_seeds], [(1, "RS"), (1, "Ours")])
        self.assertEqual(record.aggregates["RS"]["n"].max(), 1)

    def test_all_seeds_failed(self):
        def diverging(env, space, steps, config=None, dropout=0.0, seed=0):
            raise TrainingDiverged(seed, 1)

        with mock.patch("harness.runner.train", diverging), self.assertRaises(AllSeedsFailed) as ctx:
            run_bench(make_config(self.out))
        metadata = json.loads((ctx.exception.run_dir / "metadata.json").read_text())
        self.assertEqual(len(metadata["failed_seeds"]), 4)

    def test_wrong_command(self):
        with self.assertRaises(HarnessError):
            run_search_cmd(make_config(self.out))


class ParallelRunTests(SimpleTestCase):
    def test_workers_do_not_change_outputs(self):
        with tempfile.TemporaryDirectory() as tmp:
            records = []
            for workers in (1, 2):
                config = make_config(Path(tmp) / f"w{workers}", presets=["RS"], steps=150, seeds=2, workers=workers,
                                     train=TINY_TRAIN, env_options={"noise_dims": 1, "horizon": 20})
                records.append(run_bench(config))
            for seed in range(2):
                with self.subTest(seed=seed):
                    first, second = (r.run_dir / f"seed-{seed}" / "curves.csv" for r in records)
                    self.assertEqual(first.read_bytes(), second.read_bytes())
            self.assertEqual(records[0].config_hash, records[1].config_hash)


@mock.patch("harness.runner.train", stub_train)
class SearchAndPermtestRunTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    @mock.patch("harness.runner.run_search", fake_search)
    def test_search_counts_and_curves(self):
        record = run_search_cmd(make_config(self.out, command="search", seeds=3))
        counts = read_csv(record.run_dir / "selection-counts.csv")
        self.assertEqual(counts["group"].tolist(), ["C1", "C1dot", "cartesian", "contact", "prev_action"])
        self.assertEqual(counts["count"].tolist(), [0, 3, 0, 0, 0])
        self.assertEqual(record.labels, ["search", "RS", "OAI"])
        for seed in range(3):
            seed_dir = record.run_dir / f"seed-{seed}"
            self.assertTrue((seed_dir / "search-trace.jsonl").exists())
            self.assertTrue((seed_dir / "space.json").exists())
        final = read_csv(record.run_dir / "final-channels.csv")
        self.assertEqual(dict(zip(final["channel"], final["count"])), {"signal_0": 3, "signal_1": 3})

    @mock.patch("harness.runner.run_search", fake_search)
    def test_single_seed_counts_are_binary(self):
        record = run_search_cmd(make_config(self.out, command="search", seeds=1))
        counts = read_csv(record.run_dir / "selection-counts.csv")
        self.assertTrue(set(counts["count"]) <= {0, 1})

    @mock.patch("harness.runner.run_permtest", fake_permtest)
    def test_permtest_summary(self):
        config = make_config(self.out, command="permtest", seeds=2, env_options={"deceptive": True},
                             channels=["signal_0", "signal_1", "noise_0", "deceptive"])
        record = run_permtest_cmd(config)
        for seed in range(2):
            importance = read_csv(record.run_dir / f"seed-{seed}" / "importance.csv")
            self.assertEqual(importance["channel"].tolist(), ["signal_0", "signal_1", "noise_0", "deceptive"])
        summary = read_csv(record.run_dir / "importance-summary.csv").set_index("channel")
        self.assertEqual(summary.loc["signal_0", "essential"], 2)
        self.assertEqual(summary.loc["noise_0", "neutral"], 2)
        self.assertAlmostEqual(summary.loc["signal_1", "mean"], -0.5)
        self.assertEqual(record.labels, ["auxiliary"])

    @mock.patch("harness.runner.run_permtest", fake_permtest)
    @mock.patch("harness.runner.dropout_sweep", fake_sweep)
    def test_dropout_sweep(self):
        record = run_permtest_cmd(make_config(self.out, command="permtest", seeds=2, sweep=True))
        sweep = read_csv(record.run_dir / "sweep-summary.csv")
        self.assertEqual(sweep["dropout_rate"].tolist(), [0.3, 0.1, 0.05, 0.01])
        self.assertTrue(np.all(np.diff(sweep["mean"].to_numpy()) > 0))
        self.assertIn("d=0.3", record.labels)
        self.assertTrue((record.run_dir / "seed-0" / "dropout-sweep.png").exists())


@mock.patch("harness.runner.train", stub_train)
class ReportTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_two_runs_one_overlay(self):
        run_bench(make_config(self.out, presets=["RS"]))
        run_bench(make_config(self.out, presets=["Ours"]))
        paths = run_report(self.out)
        self.assertTrue(paths["plot:diagnostic"].exists())
        comparison = read_csv(paths["comparison"])
        self.assertEqual(len(comparison), 2)
        self.assertEqual(set(comparison["env"]), {"diagnostic"})

    def test_missing_seed_is_annotated(self):
        record = run_bench(make_config(self.out, presets=["RS"], seeds=3))
        (record.run_dir / "seed-1" / "curves.csv").unlink()
        with self.assertLogs("harness", level="WARNING") as logs:
            paths = run_report(self.out)
        self.assertTrue(any("2 of 3 seeds" in line for line in logs.output))
        comparison = read_csv(paths["comparison"])
        self.assertEqual(comparison["seeds"].tolist(), [2])

    def test_malformed_records_are_skipped(self):
        record = run_bench(make_config(self.out, presets=["RS"], seeds=2))
        (record.run_dir / "seed-0" / "curves.csv").write_text("nonsense\n1,2,3\n")
        broken = self.out / "bench" / "diagnostic" / "0123456789ab"
        broken.mkdir(parents=True)
        (broken / "metadata.json").write_text("{not json")
        with self.assertLogs("harness.report", level="WARNING"):
            paths = run_report(self.out, self.out / "report")
        comparison = read_csv(paths["comparison"])
        self.assertEqual(comparison["seeds"].tolist(), [1])

    def test_empty_directory(self):
        with self.assertRaises(HarnessError):
            run_report(self.out)


@mock.patch("harness.runner.train", stub_train)
class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)
        self.config = self.out / "bench.json"
        self.config.write_text(json.dumps({"command": "bench", "env": "diagnostic", "presets": ["RS"],
                                           "steps": 2000}))

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, *args):
        stdout = io.StringIO()
        call_command(*args, stdout=stdout)
        return stdout.getvalue()

    def test_bench_then_report(self):
        output = self.call("bench", "--config", str(self.config), "--seeds", "2", "--out", str(self.out / "runs"))
        self.assertIn("2/2 seeds completed", output)
        output = self.call("report", "--out", str(self.out / "runs"))
        self.assertIn("report.csv", output)

    def test_config_error_exit_code(self):
        self.config.write_text(json.dumps({"env": "diagnostic", "presets": ["Best"]}))
        with self.assertRaises(CommandError) as ctx:
            self.call("bench", "--config", str(self.config), "--out", str(self.out))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_existing_run_needs_force(self):
        args = ("bench", "--config", str(self.config), "--seeds", "1", "--out", str(self.out / "runs"))
        self.call(*args)
        with self.assertRaises(CommandError) as ctx:
            self.call(*args)
        self.assertEqual(ctx.exception.returncode, 1)
        self.call(*args, "--force")

    def test_all_seeds_failed_exit_code(self):
        def diverging(env, space, steps, config=None, dropout=0.0, seed=0):
            raise TrainingDiverged(seed, 1)

        with mock.patch("harness.runner.train", diverging), self.assertRaises(CommandError) as ctx:
            self.call("bench", "--config", str(self.config), "--seeds", "1", "--out", str(self.out / "runs"))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_report_of_empty_directory(self):
        with self.assertRaises(CommandError) as ctx:
            self.call("report", "--out", str(self.out / "nothing-here"))
        self.assertEqual(ctx.exception.returncode, 1)
