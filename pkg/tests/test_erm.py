"""Tests for the ERM oracles, projections and the Jacobi SVD."""

import math
import unittest

import numpy as np

from minimaxforecast import FiniteExpertClass, RandomStream, ThresholdClass, TraceNormClass, absolute_loss, squared_loss
from minimaxforecast.erm import (
    FiniteErm,
    ThresholdErm,
    TraceNormErm,
    box_project,
    bruteforce_tracenorm_erm,
    create_oracle,
    dykstra_project,
    finite_erm,
    induced_threshold_class,
    jacobi_svd,
    l1_ball_project,
    spectral_norm,
    threshold_erm,
    trace_norm,
    tracenorm_erm,
    tracenorm_project,
)
from minimaxforecast.errors import ArgumentError, CapacityError, DimensionError, NumericError

PAIR = FiniteExpertClass.new([[1, 1], [-1, -1]])


class TestFiniteErm(unittest.TestCase):
    """Exact ERM over explicit tables."""

    def test_tie_goes_to_lowest_row(self):
        """Both experts lose 2 on (1, -1); row 0 wins the tie."""
        self.assertEqual(finite_erm(PAIR, [1, -1], absolute_loss()), (2.0, 0))

    def test_perfect_expert(self):
        """The constant +1 expert fits (1, 1) exactly."""
        self.assertEqual(finite_erm(PAIR, [1, 1], absolute_loss()), (0.0, 0))

    def test_zero_expert(self):
        """The zero expert loses 1 per round."""
        self.assertEqual(finite_erm(FiniteExpertClass.new([[0, 0]]), [1, -1], absolute_loss()), (2.0, 0))

    def test_batch_matches_single_calls(self):
        """infimum_many agrees with infimum row by row and counts every row."""
        expert_class = FiniteExpertClass.random(5, 4, RandomStream(1, "class"))
        oracle = FiniteErm(expert_class, absolute_loss())
        ys = RandomStream(1, "ys").rademacher((9, 4))
        batch = oracle.infimum_many(ys)
        np.testing.assert_allclose(batch, [oracle.infimum(y) for y in ys])
        self.assertEqual(oracle.calls, 18)

    def test_scaled_table(self):
        """Scaled oracles divide the class by b."""
        expert_class = FiniteExpertClass.new([[2.0, -2.0]], bound_b=2.0)
        self.assertEqual(FiniteErm(expert_class, absolute_loss(), scaled=True).infimum([1, -1]), 0.0)

    def test_monotone_under_class_inclusion(self):
        """Adding experts can only lower the infimum."""
        stream = RandomStream(3, "inclusion")
        small = FiniteExpertClass.random(3, 5, stream.derive("small"))
        extra = FiniteExpertClass.random(2, 5, stream.derive("extra"))
        large = small.extended(extra)
        for k, y in enumerate(stream.derive("ys").rademacher((8, 5))):
            loss = absolute_loss() if k % 2 else squared_loss()
            self.assertLessEqual(finite_erm(large, y, loss)[0], finite_erm(small, y, loss)[0] + 1e-12)

    def test_outcome_length_checked(self):
        """Oracles take full-length outcome vectors only."""
        with self.assertRaises(DimensionError):
            FiniteErm(PAIR, absolute_loss()).infimum([1])

    def test_dispatcher_picks_oracle_by_class_type(self):
        """Each class type maps to its oracle; unknown types are rejected."""
        self.assertIsInstance(create_oracle(PAIR, absolute_loss()), FiniteErm)
        self.assertIsInstance(create_oracle(ThresholdClass(instances=(0.1, 0.2)), absolute_loss()), ThresholdErm)
        self.assertIsInstance(create_oracle(TraceNormClass.full(2, 2, 1.0), absolute_loss()), TraceNormErm)
        with self.assertRaises(ArgumentError):
            create_oracle(object(), absolute_loss())


class TestThresholds(unittest.TestCase):
    """One-dimensional threshold classes."""

    def test_separable_labels(self):
        """(-1, -1, +1) is separated by a threshold between 0.5 and 0.9."""
        fit = threshold_erm([0.1, 0.5, 0.9], [-1, -1, 1])
        self.assertEqual(fit.errors, 0)
        self.assertTrue(0.5 < fit.threshold < 0.9)

    def test_one_mistake(self):
        """(+1, -1, +1) needs one mistake."""
        self.assertEqual(threshold_erm([0.1, 0.5, 0.9], [1, -1, 1]).errors, 1)

    def test_single_point(self):
        """One instance is always fitted."""
        self.assertEqual(threshold_erm([0.3], [1]).errors, 0)

    def test_unsorted_instances(self):
        """Instances must be strictly increasing."""
        with self.assertRaises(ArgumentError):
            threshold_erm([0.5, 0.1], [1, 1])

    def test_oracle_matches_induced_class(self):
        """The threshold oracle agrees with exhaustive ERM over the induced class, in any order."""
        instances = (0.1, 0.3, 0.5, 0.7, 0.9)
        order = (3, 0, 4, 1, 2)
        oracle = ThresholdErm(ThresholdClass(instances=instances, order=order), absolute_loss())
        induced = induced_threshold_class(instances).permuted(order)
        for y in RandomStream(4, "labels").rademacher((20, 5)):
            self.assertEqual(oracle.infimum(y), finite_erm(induced, y, absolute_loss())[0])

    def test_induced_class_size(self):
        """Three points give four positive behaviours and six distinct ones with both polarities."""
        self.assertEqual(induced_threshold_class((0.1, 0.5, 0.9), "positive").n_experts, 4)
        self.assertEqual(induced_threshold_class((0.1, 0.5, 0.9)).n_experts, 6)


class TestProjections(unittest.TestCase):
    """Euclidean projections."""

    def test_l1_ball(self):
        """Water filling onto the l1 ball."""
        np.testing.assert_allclose(l1_ball_project([3, 1], 2), [2, 0])
        np.testing.assert_allclose(l1_ball_project([1, 1], 1), [0.5, 0.5])
        np.testing.assert_allclose(l1_ball_project([0.2, 0.1], 2), [0.2, 0.1])

    def test_l1_ball_rejects_bad_input(self):
        """Negative radius or entries are argument errors."""
        with self.assertRaises(ArgumentError):
            l1_ball_project([1, 1], 0)
        with self.assertRaises(ArgumentError):
            l1_ball_project([-1, 1], 1)

    def test_tracenorm_projection(self):
        """diag(3, 1) projects to diag(2, 0); interior points are unchanged."""
        np.testing.assert_allclose(tracenorm_project(np.diag([3.0, 1.0]), 2.0), np.diag([2.0, 0.0]), atol=1e-9)
        inside = np.diag([1.0, 0.5])
        np.testing.assert_allclose(tracenorm_project(inside, 2.0), inside)
        np.testing.assert_allclose(tracenorm_project(np.zeros((2, 2)), 1.0), np.zeros((2, 2)))

    def test_tracenorm_projection_idempotent(self):
        """Projecting twice equals projecting once."""
        for k in range(4):
            w = RandomStream(6, "idempotent", k).uniform(-3.0, 3.0, size=(3, 2 + k % 2))
            once = tracenorm_project(w, 2.0)
            np.testing.assert_allclose(tracenorm_project(once, 2.0), once, atol=1e-9)
            self.assertLessEqual(trace_norm(once), 2.0 + 1e-9)

    def test_dykstra_shortcuts(self):
        """A single projection that already lands in the other set is the answer."""
        inside = np.array([[0.3, -0.2], [0.1, 0.4]])
        np.testing.assert_array_equal(dykstra_project(inside, 2.0, 1.0), inside)
        np.testing.assert_allclose(dykstra_project(np.diag([3.0, 0.0]), 1.0, 1.0), np.diag([1.0, 0.0]))
        flat = np.full((2, 2), 0.9)
        np.testing.assert_allclose(dykstra_project(flat, 1.0, 1.0), np.full((2, 2), 0.5), atol=1e-9)

    def test_box_projection(self):
        """Entries are clipped to the box."""
        np.testing.assert_allclose(box_project([[2.0, -3.0], [0.5, 0.0]], 1.0), [[1.0, -1.0], [0.5, 0.0]])

    def test_dykstra_lands_in_both_sets(self):
        """The intersection projection respects the trace-norm ball and the box."""
        w = RandomStream(2, "matrix").uniform(-3.0, 3.0, size=(3, 3))
        projected = dykstra_project(w, 2.0, 1.0)
        self.assertLessEqual(trace_norm(projected), 2.0 + 1e-9)
        self.assertLessEqual(float(np.max(np.abs(projected))), 1.0 + 1e-3)


class TestJacobiSvd(unittest.TestCase):
    """One-sided Jacobi SVD."""

    def test_matches_numpy(self):
        """Singular values agree with numpy and the factors rebuild the matrix."""
        for shape in ((5, 3), (3, 5), (4, 4)):
            a = RandomStream(9, "svd", shape[0], shape[1]).uniform(-1.0, 1.0, size=shape)
            u, s, vt = jacobi_svd(a)
            np.testing.assert_allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-10)
            np.testing.assert_allclose((u * s) @ vt, a, atol=1e-10)

    def test_rank_deficient(self):
        """Repeated or vanishing columns converge to numpy's singular values."""
        sign = np.array([[1, 1, -1, 1], [1, 1, -1, 1], [1, -1, 1, 1], [-1, 1, 1, -1]], dtype=float)
        outer = np.outer([1.0, -2.0, 0.5, 3.0], [0.5, 1.0, -1.0, 2.0])
        for a in (np.ones((4, 4)), outer, sign, np.zeros((4, 4)), np.ones((3, 5))):
            u, s, vt = jacobi_svd(a)
            np.testing.assert_allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-10)
            np.testing.assert_allclose((u * s) @ vt, a, atol=1e-10)
        self.assertAlmostEqual(spectral_norm(np.ones((4, 4))), 4.0)
        self.assertAlmostEqual(trace_norm(sign), float(np.sum(np.linalg.svd(sign, compute_uv=False))))

    def test_norms(self):
        """Trace and spectral norms of a diagonal matrix."""
        self.assertAlmostEqual(trace_norm(np.diag([3.0, -1.0])), 4.0)
        self.assertAlmostEqual(spectral_norm(np.diag([3.0, -1.0])), 3.0)

    def test_sweep_cap(self):
        """Running out of sweeps raises a numeric error with the count."""
        a = RandomStream(1, "svd").uniform(-1.0, 1.0, size=(6, 6))
        with self.assertRaises(NumericError) as ctx:
            jacobi_svd(a, max_sweeps=1)
        self.assertEqual(ctx.exception.iterations, 1)


class TestTraceNormErm(unittest.TestCase):
    """Approximate ERM over the trace-norm ball intersected with a box."""

    def test_feasible_exact_fit(self):
        """All-ones is inside a radius-10 ball, so the loss reaches 0."""
        result = tracenorm_erm(TraceNormClass.full(2, 2, 10.0), [1, 1, 1, 1], absolute_loss())
        self.assertAlmostEqual(result.value, 0.0)

    def test_radius_binds(self):
        """A 1x1 ball of radius 0.5 leaves loss 0.5 on outcome 1."""
        result = tracenorm_erm(TraceNormClass.full(1, 1, 0.5), [1], absolute_loss())
        self.assertAlmostEqual(result.value, 0.5)

    def test_empty_outcomes(self):
        """No outcomes, no loss."""
        result = tracenorm_erm(TraceNormClass.full(2, 2, 1.0), [], absolute_loss())
        self.assertEqual(result.value, 0.0)
        self.assertEqual(result.matrix, ((0.0, 0.0), (0.0, 0.0)))

    def test_iteration_cap_flags_nonconvergence(self):
        """Hitting the cap returns the best iterate flagged as not converged."""
        oracle = TraceNormErm(TraceNormClass.full(2, 2, 1.0), squared_loss(), max_iterations=2, tolerance=1e-15)
        result = oracle.minimize([1.0, 0.2, -0.5, 0.3])
        self.assertFalse(result.converged)
        self.assertEqual(oracle.unconverged, 1)

    def test_warm_start_never_worse(self):
        """Starting from a previous minimizer cannot end above that minimizer's value."""
        tracenorm_class = TraceNormClass.full(3, 3, 2.0)
        z = RandomStream(7, "warm").uniform(-1.0, 1.0, size=7)
        cold = tracenorm_erm(tracenorm_class, z, squared_loss(), max_iterations=50)
        warm = tracenorm_erm(tracenorm_class, z, squared_loss(), max_iterations=50, initial=cold.matrix)
        self.assertLessEqual(warm.value, cold.value + 1e-12)
        oracle = TraceNormErm(tracenorm_class, squared_loss(), max_iterations=50)
        first = oracle.minimize(z)
        self.assertLessEqual(oracle.minimize(z).value, first.value + 1e-12)

    def test_warm_start_shape_checked(self):
        """A starting point of the wrong shape is a dimension error."""
        with self.assertRaises(DimensionError):
            tracenorm_erm(TraceNormClass.full(2, 2, 1.0), [1.0], squared_loss(), initial=np.zeros((3, 3)))

    def test_stall_stops_early(self):
        """Without improvement for ``patience`` iterations the solver stops, converged."""
        result = tracenorm_erm(TraceNormClass.full(1, 1, 0.5), [1], absolute_loss(), max_iterations=1000, patience=5)
        self.assertTrue(result.converged)
        self.assertLess(result.iterations, 1000)
        self.assertAlmostEqual(result.value, 0.5)

    def test_matches_bruteforce_squared_loss(self):
        """On 2x2 instances the solver agrees with the grid oracle to 1e-3."""
        stream = RandomStream(5, "bruteforce")
        for k in range(3):
            z = stream.derive("z", k).uniform(-1.0, 1.0, size=4)
            tracenorm_class = TraceNormClass.full(2, 2, 1.0)
            solver = {"max_iterations": 5000, "tolerance": 1e-12, "patience": 5000}
            approx = tracenorm_erm(tracenorm_class, z, squared_loss(), **solver).value
            brute, _ = bruteforce_tracenorm_erm(tracenorm_class, z, squared_loss())
            self.assertLess(abs(approx - brute), 1e-3)

    def test_bruteforce_capacity(self):
        """The grid oracle only handles 2x2 matrices."""
        with self.assertRaises(CapacityError):
            bruteforce_tracenorm_erm(TraceNormClass.full(3, 3, 1.0), [1.0], absolute_loss())

    def test_value_never_below_feasible_optimum(self):
        """The best iterate is feasible, so its value cannot beat the radius bound."""
        result = tracenorm_erm(TraceNormClass.full(1, 2, 1.0), [1, 1], absolute_loss())
        # |w1| + |w2| <= sqrt(2) * ||w||_2 and ||w||_tr = ||w||_2 <= 1 for a 1x2 matrix
        self.assertGreaterEqual(result.value, 2.0 - math.sqrt(2.0) - 1e-9)


if __name__ == "__main__":
    unittest.main()
