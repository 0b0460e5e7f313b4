import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sensikit.errors import DomainError
from sensikit.sampler import measure_pair, sample_sensitivity
from sensikit.svm import (
    SvmConfig,
    misclassification,
    svm_global_sensitivity,
    svm_objective,
    svm_target,
    svm_train,
)
from sensikit.targets import gen_two_gaussians

import oracles


def dual_value(model, y):
    return float(model.alpha.sum() - 0.5 * model.w @ model.w)


small_datasets = st.integers(1, 2).flatmap(
    lambda d: st.tuples(
        st.just(d),
        hnp.arrays(np.float64, st.tuples(st.integers(1, 4), st.just(d)), elements=st.floats(0, 1, width=32)),
        st.sampled_from([0.1, 1.0, 3.0, 10.0]),
        st.randoms(use_true_random=False),
    )
)


@settings(max_examples=60, deadline=None)
@given(small_datasets)
def test_objective_matches_brute_force(case):
    d, X, C, rnd = case
    y = np.array([rnd.choice([-1.0, 1.0]) for _ in range(X.shape[0])])
    records = np.column_stack([X, y])
    model = svm_train(records, SvmConfig(C=C, d=d))
    ours = svm_objective(records, model.w, model.b, C)
    grid, _ = oracles.svm_primal_grid(X, y, C)
    # The dual value is a certified lower bound on the optimum; the grid an upper bound.
    assert dual_value(model, y) - 1e-9 <= ours <= grid + 1e-4
    assert ours - dual_value(model, y) <= 1e-4
    assert abs(model.alpha @ y) < 1e-12
    assert np.all((model.alpha >= 0) & (model.alpha <= C / X.shape[0]))


def test_two_point_threshold():
    records = np.array([[0.0, -1.0], [1.0, 1.0]])
    model = svm_train(records, SvmConfig(C=1000.0, d=1))
    assert model.converged
    assert -model.b / model.w[0] == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("label", [1.0, -1.0])
def test_single_class(label):
    records = np.array([[0.1, 0.7, label], [0.4, 0.2, label], [0.9, 0.9, label]])
    model = svm_train(records, SvmConfig(C=3.0, d=2))
    assert np.array_equal(model.w, np.zeros(2))
    assert model.b == label
    assert svm_objective(records, model.w, model.b, 3.0) == 0.0


def test_deterministic_and_order_sensitive_input():
    records = gen_two_gaussians(2)(np.random.default_rng(3), 50)
    a = svm_train(records, SvmConfig())
    b = svm_train(records.copy(), SvmConfig())
    assert a.as_vector().tobytes() == b.as_vector().tobytes()
    c = svm_train(records[::-1].copy(), SvmConfig())
    # Reordering is a different input; the optimum agrees up to solver tolerance.
    np.testing.assert_allclose(c.w, a.w, atol=1e-3)


def test_nonprivate_error_floor():
    # Expected test error over independent training sets, n=1000, C=3.
    p = gen_two_gaussians(2)
    errors = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        model = svm_train(p(rng, 1000), SvmConfig(C=3.0, d=2))
        errors.append(misclassification(model.w, model.b, p(rng, 5000)))
    assert np.mean(errors) < 0.01


def test_bias_is_primal_optimal_without_free_vectors():
    # Unbalanced classes deep inside the margin: the objective slopes in b.
    rng = np.random.default_rng(11)
    records = gen_two_gaussians(2)(rng, 1000)
    model = svm_train(records, SvmConfig(C=3.0, d=2))
    base = svm_objective(records, model.w, model.b, 3.0)
    for shift in (-1e-3, 1e-3, -0.1, 0.1):
        assert svm_objective(records, model.w, model.b + shift, 3.0) >= base - 1e-12


def test_duplicate_neighbour_is_insensitive():
    target = svm_target(SvmConfig(), 20)
    records = gen_two_gaussians(2)(np.random.default_rng(1), 21)
    records[19] = records[0]
    records[20] = records[0]
    assert measure_pair(target, records) == 0.0


def test_sampled_sensitivity_below_global():
    target = svm_target(SvmConfig(C=3.0, d=2), 100)
    sample = sample_sensitivity(target, gen_two_gaussians(2), 100, 4)
    assert sample.values.max() < target.global_bound


class TestGlobalBound:
    def test_values(self):
        assert svm_global_sensitivity(3, 2, 1000) == pytest.approx(10.509, abs=5e-4)
        assert svm_global_sensitivity(3, 2, 1000) == pytest.approx(2 + 6 * math.sqrt(2) + 0.024)
        assert svm_global_sensitivity(0, 5, 10) == 2.0
        assert svm_global_sensitivity(3, 16, 1000) == pytest.approx(26.192, abs=5e-4)
        assert svm_global_sensitivity(3, 8, 1000) == pytest.approx(19.067, abs=5e-4)

    def test_attached_to_target(self):
        assert svm_target(SvmConfig(C=3.0, d=4), 200).global_bound == svm_global_sensitivity(3, 4, 200)


class TestValidation:
    @pytest.mark.parametrize("kwargs", [dict(C=0.0), dict(d=0), dict(d=1.5), dict(tolerance=0.0)])
    def test_config(self, kwargs):
        with pytest.raises(DomainError):
            SvmConfig(**kwargs)

    def test_labels(self):
        with pytest.raises(DomainError):
            svm_train(np.array([[0.1, 0.0], [0.2, 1.0]]), SvmConfig(d=1))

    def test_width(self):
        with pytest.raises(DomainError):
            svm_train(np.array([[0.1, 0.2, 1.0]]), SvmConfig(d=1))

    def test_non_finite(self):
        with pytest.raises(DomainError):
            svm_train(np.array([[math.nan, 1.0]]), SvmConfig(d=1))
