import numpy as np
import pytest

from cohortshift import ConfigError, make_task, mixed_type_stumps, two_gaussians_linear
from cohortshift.predict import query


class TestTwoGaussiansLinear:
    def test_deterministic(self):
        a = two_gaussians_linear(50, seed=3)
        b = two_gaussians_linear(50, seed=3)
        assert np.array_equal(a.cohort.values, b.cohort.values)
        assert np.array_equal(a.target, b.target)
        assert a.predictor_spec == b.predictor_spec

    def test_target_is_shifted_outputs(self):
        task = two_gaussians_linear(40, seed=1, shift=0.7)
        y = query(task.predictor, task.cohort.values)
        assert np.allclose(task.target, y + 0.7)

    def test_stump_variant_nondifferentiable(self):
        task = two_gaussians_linear(40, seed=1, model="stump_ensemble")
        assert task.predictor_spec["kind"] == "stump_ensemble"

    def test_minimum_size(self):
        with pytest.raises(ConfigError):
            two_gaussians_linear(5, seed=0)


class TestMixedTypeStumps:
    def test_has_categorical_with_three_levels(self):
        task = mixed_type_stumps(30, seed=0)
        cats = [f for f in task.cohort.schema if f.kind == "categorical"]
        assert any(f.n_levels >= 3 for f in cats)
        assert len(cats) >= 1

    def test_has_immutable_feature(self):
        task = mixed_type_stumps(30, seed=0)
        assert any(f.immutable for f in task.cohort.schema)

    def test_deterministic(self):
        a = mixed_type_stumps(30, seed=9)
        b = mixed_type_stumps(30, seed=9)
        assert np.array_equal(a.cohort.values, b.cohort.values)
        assert np.array_equal(a.target, b.target)


class TestMakeTask:
    def test_dispatch(self):
        assert make_task("two-gaussians-linear", 20, 0).name == "two-gaussians-linear"
        assert make_task("mixed-type-stumps", 20, 0).name == "mixed-type-stumps"

    def test_unknown_generator(self):
        with pytest.raises(ConfigError, match="unknown generator"):
            make_task("spirals", 20, 0)

    def test_small_n_rejected(self):
        with pytest.raises(ConfigError):
            make_task("two-gaussians-linear", 0, 0)
