import itertools
import math

import numpy as np
import pytest

from cohortshift import (
    ProjectionSet,
    TransportBundle,
    quantile_band,
    sample_projections,
    sw2,
    ucl_sw2,
    ucl_w2,
    w2_1d,
)


def brute_force_w2(a, b):
    """Minimum mean squared pairing cost over all permutations; the oracle."""
    n = len(a)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = sum((a[i] - b[perm[i]]) ** 2 for i in range(n)) / n
        best = min(best, cost)
    return best


class TestSampleProjections:
    def test_rows_unit_norm(self):
        p = sample_projections(5, 64, seed=0)
        assert np.allclose(np.linalg.norm(p.directions, axis=1), 1.0, atol=1e-12)

    def test_one_dimensional_signs(self):
        p = sample_projections(1, 50, seed=1)
        assert set(np.unique(p.directions)) <= {-1.0, 1.0}

    def test_deterministic(self):
        a = sample_projections(4, 32, seed=9)
        b = sample_projections(4, 32, seed=9)
        assert np.array_equal(a.directions, b.directions)

    def test_mean_direction_small(self):
        # Monte Carlo uniformity check: the average of many uniform sphere
        # points concentrates near the origin.
        p = sample_projections(3, 10000, seed=2)
        assert np.linalg.norm(p.directions.mean(axis=0)) < 0.05

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            sample_projections(0, 5, seed=0)
        with pytest.raises(ValueError):
            sample_projections(3, 0, seed=0)


class TestW21d:
    def test_shifted_pair(self):
        cost, plan = w2_1d([0.0, 1.0], [1.0, 2.0])
        assert cost == pytest.approx(1.0, abs=1e-12)
        assert plan[0] == 0 and plan[1] == 1

    def test_identical_samples_zero(self):
        cost, plan = w2_1d([3.0, 1.0, 2.0], [3.0, 1.0, 2.0])
        assert cost == 0.0
        assert np.array_equal(np.sort(plan), np.arange(3))

    def test_single_pair(self):
        cost, _ = w2_1d([0.0], [3.0])
        assert cost == 9.0

    def test_plan_matches_order_statistics(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=12), rng.normal(size=12)
        cost, plan = w2_1d(a, b)
        paired = np.mean((a - b[plan]) ** 2)
        assert paired == pytest.approx(cost, rel=1e-12)

    def test_matches_brute_force_small_n(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            n = int(rng.integers(1, 7))
            a, b = rng.normal(size=n), rng.normal(size=n)
            cost, _ = w2_1d(a, b)
            assert cost == pytest.approx(brute_force_w2(a, b), abs=1e-12)

    def test_unequal_lengths_rejected(self):
        with pytest.raises(ValueError):
            w2_1d([1.0, 2.0], [1.0])


class TestSw2:
    def test_identical_cohorts_zero(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(10, 3))
        p = sample_projections(3, 16, seed=0)
        cost, plans = sw2(x, x, p)
        assert cost == 0.0
        assert plans.shape == (16, 10)

    def test_single_axis_reduces_to_w2(self):
        rng = np.random.default_rng(2)
        x, y = rng.normal(size=(8, 2)), rng.normal(size=(8, 2))
        p = ProjectionSet(np.array([[1.0, 0.0]]), seed=0)
        cost, _ = sw2(x, y, p)
        expected, _ = w2_1d(x[:, 0], y[:, 0])
        assert cost == pytest.approx(expected, rel=1e-12)

    def test_unit_shift_closed_form(self):
        # Vertical unit translation in 2D costs E[theta_y^2] = 1/2.
        p = sample_projections(2, 2000, seed=3)
        x = np.array([[0.0, 0.0], [1.0, 0.0]])
        y = np.array([[0.0, 1.0], [1.0, 1.0]])
        cost, _ = sw2(x, y, p)
        assert cost == pytest.approx(0.5, abs=0.05)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=(15, 3)), rng.normal(size=(15, 3))
        p = sample_projections(3, 20, seed=1)
        base, _ = sw2(x, y, p)
        perm = rng.permutation(15)
        assert sw2(x[perm], y, p)[0] == pytest.approx(base, rel=1e-12)
        assert sw2(x, y[perm], p)[0] == pytest.approx(base, rel=1e-12)

    def test_monte_carlo_error_decays(self):
        # Error against a high-resolution reference shrinks ~ 1/sqrt(N).
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=(30, 4)), rng.normal(size=(30, 4))
        ref, _ = sw2(x, y, sample_projections(4, 40000, seed=99))

        def rms_error(count, seeds):
            errs = [sw2(x, y, sample_projections(4, count, seed=s))[0] - ref for s in seeds]
            return float(np.sqrt(np.mean(np.square(errs))))

        e_small = rms_error(25, range(20))
        e_big = rms_error(400, range(20, 40))
        assert e_big < e_small / 2.0

    def test_shape_mismatch(self):
        p = sample_projections(3, 4, seed=0)
        with pytest.raises(ValueError):
            sw2(np.zeros((5, 3)), np.zeros((6, 3)), p)
        with pytest.raises(ValueError):
            sw2(np.zeros((5, 2)), np.zeros((5, 2)), p)


class TestQuantileBand:
    def test_half_width_formula(self):
        lo, hi = quantile_band(0.5, 100, 0.1)
        eps = math.sqrt(math.log(40.0) / 200.0)
        assert hi - 0.5 == pytest.approx(eps, rel=1e-12)
        assert 0.5 - lo == pytest.approx(eps, rel=1e-12)
        assert eps == pytest.approx(0.1358, abs=2e-4)

    def test_clamped_at_zero(self):
        lo, _ = quantile_band(0.0, 50, 0.1)
        assert lo == 0.0

    def test_large_n_band_shrinks(self):
        lo, hi = quantile_band(0.5, 10**6, 0.1)
        assert hi - lo < 0.004

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            quantile_band(0.5, 0, 0.1)
        with pytest.raises(ValueError):
            quantile_band(0.5, 10, 1.5)


class TestUclW2:
    def test_coincident_samples(self):
        y = np.linspace(-1, 1, 200)
        r = ucl_w2(y, y)
        assert r.point_estimate == 0.0
        assert r.ucl >= 0.0

    def test_dominates_point_estimate_randomized(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            n = int(rng.integers(5, 120))
            y = rng.normal(rng.uniform(-1, 1), rng.uniform(0.2, 2), size=n)
            z = rng.normal(rng.uniform(-1, 1), rng.uniform(0.2, 2), size=n)
            r = ucl_w2(y, z)
            assert r.ucl >= r.point_estimate - 1e-12

    def test_monotone_in_band_width(self):
        # Smaller alpha widens the band, which can only raise the limit.
        rng = np.random.default_rng(7)
        y, z = rng.normal(size=80), rng.normal(1.0, 1.5, size=80)
        wide = ucl_w2(y, z, alpha=0.01)
        narrow = ucl_w2(y, z, alpha=0.4)
        assert wide.ucl >= narrow.ucl

    def test_invalid_delta(self):
        with pytest.raises(ValueError):
            ucl_w2(np.ones(5), np.ones(5), delta=0.6)

    def test_unsquared_flag(self):
        rng = np.random.default_rng(8)
        y, z = rng.normal(size=50), rng.normal(size=50)
        squared = ucl_w2(y, z, square_integrand=True)
        linear = ucl_w2(y, z, square_integrand=False)
        assert squared.ucl != linear.ucl


class TestUclSw2:
    def test_identical_cohorts(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(60, 3))
        p = sample_projections(3, 12, seed=0)
        r = ucl_sw2(x, x, p)
        assert r.point_estimate == 0.0
        assert r.ucl >= 0.0

    def test_single_projection_reduces_to_ucl_w2(self):
        rng = np.random.default_rng(10)
        x, y = rng.normal(size=(40, 3)), rng.normal(size=(40, 3))
        theta = np.array([[0.6, 0.8, 0.0]])
        p = ProjectionSet(theta, seed=0)
        full = ucl_sw2(x, y, p)
        projected = ucl_w2(x @ theta[0], y @ theta[0])
        assert full.ucl == pytest.approx(projected.ucl, rel=1e-12)
        assert full.point_estimate == pytest.approx(projected.point_estimate, rel=1e-12)

    def test_monotone_in_band_width(self):
        rng = np.random.default_rng(11)
        x, y = rng.normal(size=(50, 3)), rng.normal(0.5, 1.0, size=(50, 3))
        p = sample_projections(3, 8, seed=1)
        assert ucl_sw2(x, y, p, alpha=0.01).ucl >= ucl_sw2(x, y, p, alpha=0.4).ucl


class TestTransportBundle:
    def test_accepts_bijections(self):
        TransportBundle(
            input_plans=np.array([[1, 0, 2], [2, 1, 0]]), output_plan=np.array([0, 2, 1])
        )

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            TransportBundle(input_plans=np.array([[0, 0, 2]]), output_plan=np.array([0, 1, 2]))
        with pytest.raises(ValueError):
            TransportBundle(input_plans=np.array([[0, 1, 2]]), output_plan=np.array([1, 1, 0]))
