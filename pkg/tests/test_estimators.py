import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from snip_allpass import AllPassInterpolator, BarrierConfig, GeodesicInterpolator, GroupDelayOptimizer, lccde_filter

from _util import random_problem


@pytest.fixture(scope="module")
def problem():
    return random_problem(2, 4, np.random.default_rng(21))


def test_params_and_clone():
    est = AllPassInterpolator(barrier=BarrierConfig(mu_final=1e-3), max_retries=3, seed=5)
    assert est.get_params()["max_retries"] == 3
    twin = clone(est)
    assert twin.get_params()["seed"] == 5 and twin is not est
    gd = clone(GroupDelayOptimizer(mu_final=1e-3))
    assert gd.set_params(max_outer=20).max_outer == 20


def test_unfitted_estimators_refuse():
    with pytest.raises(NotFittedError):
        AllPassInterpolator().predict([0.0])
    with pytest.raises(NotFittedError):
        GeodesicInterpolator().predict([0.0])
    with pytest.raises(NotFittedError):
        GroupDelayOptimizer().transform()


def test_interpolator_fit_predict_score(problem):
    omegas, As = problem
    est = AllPassInterpolator().fit(omegas, As)
    np.testing.assert_allclose(est.predict(omegas), As, atol=1e-8)
    assert est.score(omegas, As) >= -1e-8
    assert est.n_features_in_ == 2
    F = est.group_delay(omegas[0])
    np.testing.assert_allclose(np.linalg.eigvalsh(F), np.linalg.eigvalsh(est.gammas_[0]), atol=1e-4)
    x = np.random.default_rng(0).standard_normal((30, 2)) + 0j
    np.testing.assert_array_equal(est.transform(x), lccde_filter(est.filter_, x))


def test_interpolator_with_given_gammas(problem):
    omegas, As = problem
    gammas = GroupDelayOptimizer().fit_transform(omegas, As)
    est = AllPassInterpolator().fit(omegas, As, gammas=gammas)
    assert est.gamma_assignment_ is None
    np.testing.assert_allclose(est.predict(omegas), As, atol=1e-8)


def test_group_delay_optimizer(problem):
    omegas, As = problem
    gd = GroupDelayOptimizer().fit(omegas, As)
    G = gd.transform()
    assert G.shape == (4, 2, 2)
    assert gd.pd_witness_ > 0
    assert gd.achieved_trace_ == pytest.approx(sum(np.trace(g).real for g in G))


def test_geodesic_interpolator(problem):
    omegas, As = problem
    est = GeodesicInterpolator().fit(omegas, As)
    np.testing.assert_allclose(est.predict(omegas), As, atol=1e-12)
    assert est.score(omegas, As) == pytest.approx(0, abs=1e-12)


def test_mismatched_lengths_rejected(problem):
    omegas, As = problem
    with pytest.raises(ValueError):
        GeodesicInterpolator().fit(omegas[:-1], As)
