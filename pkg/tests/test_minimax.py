"""Tests for the exact Minimax Forecaster, its dynamic program and MF*."""

import math
import unittest

import numpy as np

from minimaxforecast import (
    CapacityError,
    FiniteExpertClass,
    PlayoutMode,
    ProtocolViolation,
    RandomStream,
    absolute_loss,
    exact_rademacher,
)
from minimaxforecast.erm import create_oracle
from minimaxforecast.errors import ArgumentError, DimensionError
from minimaxforecast.games import ConstantForecaster, ExactMinimaxForecaster, MinimaxStarForecaster
from minimaxforecast.minimax import (
    dp_build,
    dp_prediction,
    dp_value_explicit,
    dp_value_minmax,
    enumerate_infima,
    from_01_world,
    mf_exact_prediction,
    mf_star_predictions,
    mf_star_round,
    sign_sequences,
    theorem2_bound,
    to_01_world,
    worst_case_regret_exhaustive,
)

PAIR = FiniteExpertClass.new([[1, 1], [-1, -1]])
PAIR01 = FiniteExpertClass.new([[0, 0], [1, 1]])


class TestEnumeration(unittest.TestCase):
    """Lexicographic sign enumeration."""

    def test_order(self):
        """-1 comes before +1 and the first round is the most significant."""
        np.testing.assert_array_equal(sign_sequences(2), [[-1, -1], [-1, 1], [1, -1], [1, 1]])

    def test_empty_length(self):
        """Length 0 has exactly one (empty) sequence."""
        self.assertEqual(sign_sequences(0).shape, (1, 0))

    def test_slices(self):
        """Row ranges match the full enumeration."""
        np.testing.assert_array_equal(sign_sequences(4, start=5, stop=9), sign_sequences(4)[5:9])

    def test_infima_capacity(self):
        """Enumerations beyond the cap are refused."""
        oracle = create_oracle(FiniteExpertClass.new(np.zeros((1, 22))), absolute_loss())
        with self.assertRaises(CapacityError):
            enumerate_infima(oracle, [])


class TestWorldConversion(unittest.TestCase):
    """The affine map between the +-1 and 0/1 worlds."""

    def test_outcomes(self):
        """(+1, -1) maps to (1, 0)."""
        np.testing.assert_array_equal(to_01_world([1, -1]), [1.0, 0.0])

    def test_class(self):
        """Expert (0, 0) maps to (0.5, 0.5)."""
        self.assertEqual(to_01_world(FiniteExpertClass.new([[0, 0]])).predictions, ((0.5, 0.5),))

    def test_inverse(self):
        """from_01_world undoes to_01_world."""
        self.assertEqual(from_01_world(0.75), 0.5)

    def test_rejects_non_binary_outcomes(self):
        """Only +-1 outcomes convert."""
        with self.assertRaises(ArgumentError):
            to_01_world([0.5])


class TestDynamicProgram(unittest.TestCase):
    """The 0/1-world dynamic program."""

    def test_values(self):
        """Hand-computed values on {(0, 0), (1, 1)}."""
        table = dp_build(PAIR01)
        self.assertEqual(table.value("00"), 0.0)
        self.assertEqual(table.value("01"), -1.0)
        self.assertEqual(table.value("0"), 0.0)
        self.assertEqual(table.value("1"), 0.0)
        self.assertEqual(table.root, 0.5)

    def test_predictions(self):
        """p_1 = 0.5 and after a 1 the forecaster follows the leader."""
        table = dp_build(PAIR01)
        self.assertEqual(dp_prediction(table, ""), 0.5)
        self.assertEqual(dp_prediction(table, "1"), 1.0)

    def test_singleton_follows_expert(self):
        """A single expert (1, 1) is always predicted."""
        table = dp_build(FiniteExpertClass.new([[1, 1]]))
        for prefix in ("", "0", "1"):
            self.assertEqual(dp_prediction(table, prefix), 1.0)

    def test_root_is_half_the_rademacher_complexity(self):
        """A_0 equals the complexity of the class shifted by 1/2."""
        for k in range(5):
            expert_class = FiniteExpertClass.random(3, 4, RandomStream(k, "dp"))
            table = dp_build(to_01_world(expert_class))
            self.assertAlmostEqual(table.root, 0.5 * exact_rademacher(expert_class), places=12)
            self.assertLessEqual(table.max_increment(), 1.0 + 1e-12)

    def test_alternative_forms_agree(self):
        """The min-max and closed forms reproduce every table entry."""
        class01 = to_01_world(FiniteExpertClass.random(4, 3, RandomStream(3, "forms")))
        table = dp_build(class01)
        for length in range(4):
            for prefix in sign_sequences(length, 0.0, 1.0):
                self.assertAlmostEqual(dp_value_explicit(class01, prefix), table.value(prefix), places=12)
                if length < 3:
                    self.assertAlmostEqual(dp_value_minmax(table, prefix), table.value(prefix), places=12)

    def test_capacity_and_domain(self):
        """Long horizons and classes outside [0, 1] are refused."""
        with self.assertRaises(CapacityError):
            dp_build(FiniteExpertClass.new(np.zeros((1, 21))))
        with self.assertRaises(ArgumentError):
            dp_build(PAIR)

    def test_no_prediction_after_last_round(self):
        """The full prefix has nothing left to predict."""
        with self.assertRaises(ArgumentError):
            dp_prediction(dp_build(PAIR01), "01")


class TestExactPrediction(unittest.TestCase):
    """The +-1 world expectation form."""

    def test_pair_class(self):
        """0 at the start, then follow the observed sign."""
        self.assertEqual(mf_exact_prediction(PAIR, []), 0.0)
        self.assertEqual(mf_exact_prediction(PAIR, [1]), 1.0)

    def test_singleton_predicts_expert(self):
        """A lone expert f gets f_t at every prefix."""
        expert_class = FiniteExpertClass.new([[0.3, -0.6, 0.9]])
        for prefix, expected in (([], 0.3), ([1], -0.6), ([-1, 1], 0.9)):
            self.assertAlmostEqual(mf_exact_prediction(expert_class, prefix), expected)

    def test_matches_dynamic_program(self):
        """Both views give the same prediction at every prefix."""
        expert_class = FiniteExpertClass.random(3, 4, RandomStream(8, "views"))
        table = dp_build(to_01_world(expert_class))
        for length in range(4):
            for prefix in sign_sequences(length):
                dp = from_01_world(dp_prediction(table, to_01_world(prefix)))
                self.assertAlmostEqual(mf_exact_prediction(expert_class, prefix), dp, places=12)

    def test_full_prefix_rejected(self):
        """A prefix of length T leaves nothing to predict."""
        with self.assertRaises(ArgumentError):
            mf_exact_prediction(PAIR, [1, 1])


class TestMinimaxStar(unittest.TestCase):
    """One-playout MF*."""

    def test_pair_class_playouts(self):
        """At t=1 the prediction is Y_2 itself."""
        oracle = create_oracle(PAIR, absolute_loss())
        np.testing.assert_array_equal(mf_star_predictions(oracle, [], [[-1.0], [1.0]]), [-1.0, 1.0])

    def test_singleton_any_draw(self):
        """Draws cancel for a lone expert."""
        expert_class = FiniteExpertClass.new([[0.4, -0.2, 0.1]])
        stream = RandomStream(1, "mf_star")
        for t in range(3):
            prediction = mf_star_round(expert_class, [1.0] * t, PlayoutMode.fresh(), stream.derive("round", t))
            self.assertAlmostEqual(prediction, expert_class.predictions[0][t])

    def test_reused_mode_is_deterministic(self):
        """The same frozen signs give the same prediction twice."""
        mode = PlayoutMode.reused(RandomStream(4, "frozen"), 4)
        expert_class = FiniteExpertClass.random(3, 4, RandomStream(4, "class"))
        first = mf_star_round(expert_class, [1.0], mode)
        self.assertEqual(first, mf_star_round(expert_class, [1.0], mode))

    def test_average_approaches_exact_prediction(self):
        """Averaging many playouts recovers the exact prediction."""
        expert_class = FiniteExpertClass.random(4, 6, RandomStream(6, "class"))
        oracle = create_oracle(expert_class, absolute_loss())
        playouts = RandomStream(6, "playouts").rademacher((20000, 4))
        estimates = mf_star_predictions(oracle, [1.0], playouts)
        stderr = float(np.std(estimates, ddof=1) / math.sqrt(estimates.size))
        self.assertLess(abs(float(np.mean(estimates)) - mf_exact_prediction(expert_class, [1.0])), 4 * stderr + 1e-12)

    def test_playout_shape_checked(self):
        """Playouts must cover exactly the rounds after the prediction."""
        oracle = create_oracle(PAIR, absolute_loss())
        with self.assertRaises(DimensionError):
            mf_star_predictions(oracle, [], [[1.0, 1.0]])

    def test_fresh_mode_needs_stream(self):
        """Fresh playouts draw from a stream."""
        with self.assertRaises(ArgumentError):
            mf_star_round(PAIR, [], PlayoutMode.fresh())

    def test_theorem2_bound(self):
        """R + sqrt(2 T ln(1/delta))."""
        self.assertAlmostEqual(theorem2_bound(1.0, 8, 0.1), 1.0 + math.sqrt(16 * math.log(10)))
        with self.assertRaises(ArgumentError):
            theorem2_bound(1.0, 8, 1.5)


class TestWorstCase(unittest.TestCase):
    """Exhaustive worst-case regret."""

    def test_exact_forecaster_on_pair(self):
        """The worst case equals the Rademacher complexity 1."""
        regret, _ = worst_case_regret_exhaustive(ExactMinimaxForecaster(PAIR), PAIR)
        self.assertAlmostEqual(regret, 1.0)

    def test_exact_forecaster_on_singleton(self):
        """A lone expert is matched exactly."""
        expert_class = FiniteExpertClass.new([[0.2, -0.7, 1.0]])
        regret, _ = worst_case_regret_exhaustive(ExactMinimaxForecaster(expert_class), expert_class)
        self.assertAlmostEqual(regret, 0.0)

    def test_constant_forecaster(self):
        """Predicting 0 costs 2 on (1, 1); ties go to the last sequence."""
        regret, sequence = worst_case_regret_exhaustive(ConstantForecaster(0.0), PAIR)
        self.assertEqual(regret, 2.0)
        np.testing.assert_array_equal(sequence, [1.0, 1.0])

    def test_worst_case_equals_rademacher(self):
        """Exact on random classes of several sizes."""
        for k in range(12):
            expert_class = FiniteExpertClass.random(1 + k % 6, 2 + k % 4, RandomStream(k, "theorem1"))
            regret, _ = worst_case_regret_exhaustive(ExactMinimaxForecaster(expert_class), expert_class)
            self.assertAlmostEqual(regret, exact_rademacher(expert_class), places=9)

    def test_reordering_rounds_leaves_worst_case_unchanged(self):
        """Reversing or shuffling the round order of the class keeps the worst-case regret."""
        for k in range(4):
            expert_class = FiniteExpertClass.random(2 + k, 3 + k % 2, RandomStream(k, "reorder"))
            horizon = expert_class.horizon
            regret, _ = worst_case_regret_exhaustive(ExactMinimaxForecaster(expert_class), expert_class)
            shuffled = RandomStream(k, "reorder_order").permutation(horizon)
            for order in (np.arange(horizon)[::-1], shuffled):
                reordered = expert_class.permuted(order)
                other, _ = worst_case_regret_exhaustive(ExactMinimaxForecaster(reordered), reordered)
                self.assertAlmostEqual(other, regret, places=9)

    def test_randomized_forecaster_refused(self):
        """Only deterministic forecasters have a response tree."""
        forecaster = MinimaxStarForecaster(create_oracle(PAIR, absolute_loss()))
        with self.assertRaises(ProtocolViolation):
            worst_case_regret_exhaustive(forecaster, PAIR)


if __name__ == "__main__":
    unittest.main()
