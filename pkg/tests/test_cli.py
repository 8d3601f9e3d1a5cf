"""Tests for config parsing, the experiment runner, the verify suites and the command line."""

import csv
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

from minimaxforecast import ConfigError, exact_rademacher, theorem3_bound
from minimaxforecast.__main__ import build_parser, main, resolve_spec
from minimaxforecast.config import OUTPUT_ENV, ExperimentSpec, load_config, parse_config
from minimaxforecast.runner import (
    CURVE_FILE,
    SUMMARY_FILE,
    TRANSCRIPT_FILE,
    build_class,
    default_instances,
    emit_curve,
    fmt,
    permutation_for,
    rademacher_for,
    run,
    schedule_for,
)
from minimaxforecast.types import ThresholdClass, TraceNormClass
from minimaxforecast.verify import (
    VERIFY_FILE,
    Verdict,
    verify_determinism,
    verify_dp,
    verify_lemma4,
    verify_theorem1,
    verify_theorem2_expectation,
    verify_theorem2_high_probability,
    verify_theorem3,
    verify_theorem4_rate,
    verify_theorem5,
)

SUMMARY_KEYS = {
    "kind",
    "seed",
    "trials",
    "mean_regret",
    "regret_stderr",
    "rademacher_estimate",
    "bound_value",
    "bound_violation_fraction",
    "erm_calls",
    "wall_time_s",
    "solver_tolerance",
}


def _read_csv(path: Path) -> list[list[str]]:
    with path.open(newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


class TestConfigParsing(unittest.TestCase):
    """The key = value config format."""

    def test_basic_file(self):
        """Comments, blank lines, lists and the inline table are understood."""
        spec = parse_config(
            "# an r2 game\n"
            "\n"
            "kind = r2   # trailing comment\n"
            "horizon = 2\n"
            "class = 1, 1; -1, -1\n"
            "adversary = fixed_sequence\n"
            "adversary_sequence = 1, -1\n"
            "trials = 3\n"
        )
        self.assertEqual(spec.kind, "r2")
        self.assertEqual(spec.class_source, "inline")
        self.assertEqual(spec.expert_class, ((1.0, 1.0), (-1.0, -1.0)))
        self.assertEqual(spec.adversary_sequence, (1.0, -1.0))
        self.assertEqual(spec.trials, 3)

    def test_implied_class_sources(self):
        """CF games use the trace-norm class and transductive games use thresholds."""
        self.assertEqual(parse_config("kind = cf\n").class_source, "tracenorm")
        self.assertEqual(parse_config("kind = transductive\n").class_source, "thresholds")

    def test_unknown_key_has_line_number(self):
        """Unknown keys are reported with their line."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("kind = mf\nhorizon = 2\ncolour = red\n")
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn("colour", str(ctx.exception))

    def test_field_name_of_renamed_key_rejected(self):
        """The class table is only accepted under its config key."""
        with self.assertRaises(ConfigError):
            parse_config("expert_class = 1, 1\n")

    def test_duplicate_key(self):
        """A key given twice points at the second occurrence."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("seed = 1\nseed = 2\n")
        self.assertEqual(ctx.exception.line, 2)

    def test_missing_equals(self):
        """Every line needs a key and a value."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("kind = mf\njust words\n")
        self.assertEqual(ctx.exception.line, 2)

    def test_unparsable_list(self):
        """List items must convert."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("kind = r2\nhorizons = 2, x\n")
        self.assertEqual(ctx.exception.line, 2)

    def test_validation_error_has_line_number(self):
        """Field validation failures keep the line of the offending key."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config("kind = mf\nhorizon = 0\n")
        self.assertEqual(ctx.exception.line, 2)

    def test_cross_field_checks(self):
        """Kinds, class sources and adversaries must fit together."""
        for text in (
            "kind = cf\nclass_source = random\n",
            "kind = mf\nhorizon = 3\nclass = 1, 1\n",
            "adversary = fixed_sequence\n",
            "adversary = lemma4_switch\n",
            "suites = theorem9\n",
            "loss = hinge\n",
        ):
            with self.assertRaises(ConfigError, msg=text):
                parse_config(text)

    def test_workers_default_to_every_processor(self):
        """Unset workers leaves the pool size to the machine."""
        self.assertIsNone(ExperimentSpec().workers)
        self.assertEqual(parse_config("workers = 2\n").workers, 2)
        with self.assertRaises(ConfigError):
            parse_config("workers = 0\n")

    def test_switching_adversary_needs_real_outcomes(self):
        """Kinds that only play sign outcomes refuse the switching adversary."""
        for kind in ("mf", "mf_star"):
            with self.assertRaises(ConfigError, msg=kind):
                parse_config(f"kind = {kind}\nadversary = lemma4_switch\nswitch_round = 2\n")
        spec = parse_config("kind = r2\nadversary = lemma4_switch\nswitch_round = 2\n")
        self.assertEqual(spec.adversary, "lemma4_switch")

    def test_missing_file(self):
        """Unreadable files are config errors."""
        with self.assertRaises(ConfigError):
            load_config("/nonexistent/experiment.conf")

    def test_output_directory_from_environment(self):
        """The environment overrides the configured output directory."""
        spec = ExperimentSpec(out="results")
        with patch.dict(os.environ, {OUTPUT_ENV: "/tmp/elsewhere"}):
            self.assertEqual(spec.output_dir(), Path("/tmp/elsewhere"))
        with patch.dict(os.environ, {OUTPUT_ENV: ""}):
            self.assertEqual(spec.output_dir(), Path("results"))


class TestBuildingBlocks(unittest.TestCase):
    """Classes, orders and complexities derived from a spec."""

    def test_default_instances(self):
        """Midpoints of T equal cells of (0, 1)."""
        self.assertEqual(default_instances(4), (0.125, 0.375, 0.625, 0.875))

    def test_classes(self):
        """Each class source builds its class; random classes depend on the seed."""
        self.assertIsInstance(build_class(ExperimentSpec(kind="transductive", horizon=5)), ThresholdClass)
        self.assertIsInstance(build_class(ExperimentSpec(kind="cf", n=3)), TraceNormClass)
        first = build_class(ExperimentSpec(kind="mf", seed=4))
        self.assertEqual(first, build_class(ExperimentSpec(kind="mf", seed=4)))
        self.assertNotEqual(first, build_class(ExperimentSpec(kind="mf", seed=5)))

    def test_orders(self):
        """Identity, reversed and seeded random revelation orders."""
        np.testing.assert_array_equal(permutation_for(ExperimentSpec(order="reversed"), 0, 3), [2, 1, 0])
        shuffled = permutation_for(ExperimentSpec(order="random"), 7, 6)
        self.assertEqual(sorted(shuffled.tolist()), list(range(6)))
        np.testing.assert_array_equal(shuffled, permutation_for(ExperimentSpec(order="random"), 7, 6))

    def test_cf_schedule_covers_matrix(self):
        """The CF schedule visits every entry once."""
        schedule = schedule_for(ExperimentSpec(kind="cf", n=3, order="random"), 11)
        self.assertEqual(sorted(schedule.order), [(i, j) for i in range(3) for j in range(3)])

    def test_rademacher_for_thresholds(self):
        """Threshold classes are measured through their induced table."""
        spec = ExperimentSpec(kind="transductive", horizon=3, instances=(0.1, 0.5, 0.9))
        estimate = rademacher_for(spec, build_class(spec))
        self.assertEqual(estimate.method, "exact")
        self.assertGreater(estimate.estimate, 0.0)

    def test_rademacher_for_small_tracenorm(self):
        """The 2x2 trace-norm ball is enumerated exactly."""
        spec = ExperimentSpec(kind="cf", n=2, radius=1.0)
        self.assertEqual(rademacher_for(spec, build_class(spec)).method, "exact")

    def test_fmt(self):
        """Twelve significant digits, no trailing zeros."""
        self.assertEqual(fmt(1.0), "1")
        self.assertEqual(fmt(1 / 3), "0.333333333333")


class TestRunner(unittest.TestCase):
    """Output files and the summary of game experiments."""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = Path(self._tmp.name)
        self._env = patch.dict(os.environ, {OUTPUT_ENV: self._tmp.name})
        self._env.start()

    def tearDown(self):
        self._env.stop()
        self._tmp.cleanup()

    def test_singleton_game(self):
        """The exact forecaster tracks a lone expert with zero regret."""
        spec = ExperimentSpec(kind="mf", horizon=3, expert_class=((0.2, -0.4, 0.6),), trials=3)
        summary = run(spec)
        self.assertEqual(set(summary), SUMMARY_KEYS)
        self.assertAlmostEqual(summary["mean_regret"], 0.0)
        self.assertAlmostEqual(summary["rademacher_estimate"], 0.0)
        self.assertEqual(summary["bound_violation_fraction"], 0.0)
        self.assertEqual(summary["erm_calls"], 0)
        self.assertEqual(summary["solver_tolerance"], 0.0)
        self.assertEqual(json.loads((self.out / SUMMARY_FILE).read_text(encoding="utf-8"))["trials"], 3)
        rows = _read_csv(self.out / TRANSCRIPT_FILE)
        self.assertEqual(rows[0], ["round", "prediction", "outcome", "loss", "r_t", "z_t", "cum_loss", "cum_best", "regret"])
        self.assertEqual(len(rows), 4)
        self.assertEqual((rows[1][4], rows[1][5]), ("", ""))

    def test_r2_game(self):
        """R^2 records its rounding and spends 2 T J ERM calls per trial."""
        summary = run(ExperimentSpec(kind="r2", horizon=4, n_experts=3, trials=2))
        self.assertEqual(summary["erm_calls"], 32)
        self.assertIsNotNone(summary["bound_value"])
        rows = _read_csv(self.out / TRANSCRIPT_FILE)
        self.assertTrue(all(row[5] in ("1", "-1") for row in rows[1:]))

    def test_rademacher_only(self):
        """Estimation experiments write a summary without a transcript."""
        spec = ExperimentSpec(kind="rademacher", horizon=4, n_experts=3)
        summary = run(spec)
        self.assertIsNone(summary["mean_regret"])
        self.assertIsNone(summary["bound_value"])
        self.assertAlmostEqual(summary["rademacher_estimate"], exact_rademacher(build_class(spec)))
        self.assertFalse((self.out / TRANSCRIPT_FILE).exists())

    def test_runs_are_reproducible(self):
        """Two runs of a seeded spec write identical transcripts."""
        spec = ExperimentSpec(kind="mf_star", horizon=5, n_experts=3, trials=2, seed=17)
        run(spec)
        first = (self.out / TRANSCRIPT_FILE).read_bytes()
        run(spec)
        self.assertEqual(first, (self.out / TRANSCRIPT_FILE).read_bytes())

    def test_curve(self):
        """One curve row per horizon, with the R^2 bound re-evaluated at each T."""
        spec = ExperimentSpec(kind="r2", n_experts=2, trials=2, horizons=(2, 3))
        run(spec)
        rows = _read_csv(self.out / CURVE_FILE)
        self.assertEqual(rows[0], ["T", "mean_regret", "stderr", "bound"])
        self.assertEqual([row[0] for row in rows[1:]], ["2", "3"])
        for row in rows[1:]:
            point = spec.updated(horizon=int(row[0]), horizons=None)
            rademacher = rademacher_for(point, build_class(point)).estimate
            self.assertEqual(row[3], fmt(theorem3_bound(1.0, 1.0, 1.0, int(row[0]), 0.1, rademacher)))

    def test_curve_refused(self):
        """CF experiments and decreasing horizons have no curve."""
        with self.assertRaises(ConfigError):
            emit_curve(ExperimentSpec(kind="cf"), [4, 9])
        with self.assertRaises(ConfigError):
            emit_curve(ExperimentSpec(kind="r2"), [3, 2])


class TestVerifySuites(unittest.TestCase):
    """The quick verification suites at reduced sizes."""

    SPEC = ExperimentSpec(verify_seeds=4)

    def test_theorem1(self):
        """Worst-case regret matches the complexity on every class."""
        verdict = verify_theorem1(self.SPEC)
        self.assertTrue(verdict.passed, verdict.details)

    def test_dp(self):
        """The three forms of the dynamic program agree."""
        verdict = verify_dp(self.SPEC)
        self.assertTrue(verdict.passed, verdict.details)
        self.assertEqual(verdict.details["classes"], 4)

    def test_theorem2_expectation(self):
        """Reused-playout MF* stays close to R_T on every fixed sequence."""
        verdict = verify_theorem2_expectation(ExperimentSpec(verify_seeds=2000))
        self.assertEqual((verdict.details["classes"], verdict.details["seeds"]), (11, 2000))
        self.assertGreater(verdict.details["min_slack"], -0.1)

    def test_theorem2_high_probability(self):
        """Fresh-playout MF* rarely exceeds its high-probability bound."""
        verdict = verify_theorem2_high_probability(ExperimentSpec(verify_seeds=50, workers=1))
        self.assertTrue(verdict.passed, verdict.details)
        self.assertGreater(verdict.details["trial_seconds_max"], 0.0)

    def test_theorem3(self):
        """R^2 keeps its bound, its ERM budget and its prediction range."""
        verdict = verify_theorem3(ExperimentSpec(verify_seeds=10, workers=1, rademacher_samples=200))
        self.assertTrue(verdict.passed, verdict.details)
        self.assertTrue(verdict.details["erm_calls_exact"])
        self.assertEqual(len(verdict.details["violation_fractions"]), 6)

    def test_lemma4(self):
        """The switching adversary never lets R^2 beat f* after the switch."""
        spec = ExperimentSpec(verify_seeds=2, workers=1, rademacher_samples=50, solver_iterations=30)
        verdict = verify_lemma4(spec)
        self.assertTrue(verdict.passed, verdict.details)
        self.assertTrue(verdict.details["condition_holds"])
        self.assertGreaterEqual(verdict.details["min_post_switch_excess"], -1e-9)
        self.assertLessEqual(verdict.details["trial_seconds_mean"], verdict.details["trial_seconds_max"])

    def test_theorem4_rate(self):
        """MF* regret on thresholds grows roughly like sqrt(T)."""
        verdict = verify_theorem4_rate(ExperimentSpec(verify_seeds=40, workers=1))
        means = verdict.details["mean_regret"]
        self.assertEqual(len(means), 3)
        self.assertTrue(all(mean > 0 for mean in means), means)
        self.assertLess(verdict.details["slope"], 0.8)

    def test_theorem5(self):
        """Trace-norm ERM matches the grid oracle and the n=2 complexity is exact."""
        verdict = verify_theorem5(ExperimentSpec(rademacher_samples=200))
        self.assertLessEqual(verdict.details["erm_max_abs_difference"], 1e-3)
        self.assertAlmostEqual(verdict.details["exact_n2"], 1.0 + np.sqrt(2.0) / 2.0)
        steps = verdict.details["growth_steps"]
        self.assertEqual(len(steps), 3)
        self.assertTrue(all(step <= 1.2 for step in steps[1:]), steps)
        self.assertTrue(verdict.passed, verdict.details)

    def test_determinism(self):
        """Repeated runs give identical files."""
        self.assertTrue(verify_determinism(ExperimentSpec(verify_seeds=2)).passed)


class TestCommandLine(unittest.TestCase):
    """Exit codes and flag handling."""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _config(self, text: str) -> str:
        path = self.out / "experiment.conf"
        path.write_text(text, encoding="utf-8")
        return str(path)

    def test_flags_override_config(self):
        """Command line values win over the config file."""
        args = build_parser().parse_args(["--config", self._config("kind = mf\nseed = 3\n"), "--seed", "5", "--trials", "2"])
        spec = resolve_spec(args)
        self.assertEqual((spec.kind, spec.seed, spec.trials), ("mf", 5, 2))

    def test_verify_passes(self):
        """A quick verify run exits 0 and writes its report."""
        config = self._config("kind = verify\nsuites = theorem1, dp\nverify_seeds = 3\n")
        self.assertEqual(main(["--config", config, "--out", str(self.out), "--log-level", "WARNING"]), 0)
        report = json.loads((self.out / VERIFY_FILE).read_text(encoding="utf-8"))
        self.assertTrue(report["passed"])
        self.assertEqual([suite["name"] for suite in report["suites"]], ["theorem1", "dp"])

    def test_invalid_config(self):
        """Config errors exit 1."""
        config = self._config("kind = mf\nflavour = strange\n")
        self.assertEqual(main(["--config", config, "--out", str(self.out)]), 1)

    def test_unsupported_loss_for_kind(self):
        """The exact forecaster with the squared loss is a configuration error."""
        config = self._config("kind = mf\nloss = squared\nhorizon = 2\n")
        self.assertEqual(main(["--config", config, "--out", str(self.out)]), 1)

    def test_capacity(self):
        """Horizons beyond the dynamic program's cap exit 3."""
        config = self._config("kind = mf\nhorizon = 21\nrademacher_samples = 50\n")
        self.assertEqual(main(["--config", config, "--out", str(self.out)]), 3)

    def test_failed_suite(self):
        """A failing verify suite exits 2."""
        failing = {"theorem1": lambda spec: Verdict(name="theorem1", passed=False, details={})}
        with patch.dict("minimaxforecast.verify.SUITE_RUNNERS", failing):
            self.assertEqual(main(["--kind", "verify", "--suites", "theorem1", "--out", str(self.out)]), 2)


if __name__ == "__main__":
    unittest.main()
