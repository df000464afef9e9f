"""scikit-learn style estimators over the functional API.

``fit`` takes interpolation frequencies and unitary samples, ``predict``
returns responses on new frequencies, and :class:`AllPassInterpolator` also
``transform``s time-domain vector signals through the fitted filter.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _validation as V
from .baselines import UnitarySample, geodesic_track
from .construct import MAX_RETRIES, design_allpass
from .dataset import points_from_arrays, validate_dataset
from .gdopt import BarrierConfig, optimize_group_delays
from .polyfilter import eval_filter, group_delay, lccde_filter


def _check_samples(omegas, As):
    omegas = np.asarray(omegas, dtype=float).reshape(-1)
    As = V.as_matrix_stack(As, "As")
    if len(omegas) != len(As):
        raise ValueError(f"got {len(omegas)} frequencies but {len(As)} responses")
    return omegas, As


class GroupDelayOptimizer(BaseEstimator):
    """Minimum-trace group delays for a set of unitary samples.

    Parameters mirror :class:`snip_allpass.gdopt.BarrierConfig`; ``None``
    keeps that class's default.
    """

    def __init__(self, mu_init=None, mu_decay=0.2, mu_final=1e-4, pd_margin=1e-6,
                 newton_tol=1e-9, max_newton=100, max_outer=100):
        self.mu_init = mu_init
        self.mu_decay = mu_decay
        self.mu_final = mu_final
        self.pd_margin = pd_margin
        self.newton_tol = newton_tol
        self.max_newton = max_newton
        self.max_outer = max_outer

    def _config(self):
        return BarrierConfig(**self.get_params())

    def fit(self, omegas, As):
        omegas, As = _check_samples(omegas, As)
        res = optimize_group_delays(omegas, As, self._config())
        self.assignment_ = res
        self.gammas_ = res.gammas
        self.achieved_trace_ = res.achieved_trace
        self.pd_witness_ = res.pd_witness
        return self

    def transform(self, omegas=None, As=None):
        """Return the fitted group delays as an (n, m, m) array."""
        check_is_fitted(self, "gammas_")
        return np.stack(self.gammas_)

    def fit_transform(self, omegas, As):
        return self.fit(omegas, As).transform()


class AllPassInterpolator(BaseEstimator):
    """Matrix all-pass filter through unitary samples.

    Parameters
    ----------
    barrier : BarrierConfig, optional
        Used when ``fit`` is called without group delays.
    max_retries, seed :
        Passed to :func:`snip_allpass.construct.design_allpass`.
    """

    def __init__(self, barrier=None, max_retries=MAX_RETRIES, seed=0):
        self.barrier = barrier
        self.max_retries = max_retries
        self.seed = seed

    def fit(self, omegas, As, gammas=None):
        """Design the filter. Without ``gammas`` they are chosen by trace minimization."""
        omegas, As = _check_samples(omegas, As)
        if gammas is None:
            self.gamma_assignment_ = optimize_group_delays(omegas, As, self.barrier)
            gammas = self.gamma_assignment_.gammas
        else:
            self.gamma_assignment_ = None
        self.gammas_ = [np.asarray(g, dtype=complex) for g in gammas]
        ds = validate_dataset(points_from_arrays(omegas, As, self.gammas_))
        self.filter_ = design_allpass(ds, max_retries=self.max_retries, seed=self.seed)
        self.omegas_ = omegas
        self.n_features_in_ = As.shape[1]
        return self

    def predict(self, omegas):
        """Responses ``G(exp(j w))`` as an array of shape (K, m, m)."""
        check_is_fitted(self, "filter_")
        return eval_filter(self.filter_, np.asarray(omegas, dtype=float).reshape(-1))

    def group_delay(self, omega):
        check_is_fitted(self, "filter_")
        return group_delay(self.filter_, float(omega)).F

    def transform(self, x):
        """Filter a (T, m) signal through the difference equation."""
        check_is_fitted(self, "filter_")
        return lccde_filter(self.filter_, x)

    def score(self, omegas, As):
        """Negative mean Frobenius error of the predictions."""
        omegas, As = _check_samples(omegas, As)
        return -float(np.mean(np.linalg.norm(self.predict(omegas) - As, axis=(1, 2))))


class GeodesicInterpolator(BaseEstimator):
    """Piecewise geodesic interpolation on the unitary group."""

    def __init__(self, periodic=True):
        self.periodic = periodic

    def fit(self, omegas, As):
        omegas, As = _check_samples(omegas, As)
        self.samples_ = [UnitarySample(float(w), A) for w, A in zip(omegas, As)]
        self.n_features_in_ = As.shape[1]
        return self

    def predict(self, omegas):
        check_is_fitted(self, "samples_")
        return geodesic_track(self.samples_, np.asarray(omegas, dtype=float).reshape(-1), self.periodic)

    def score(self, omegas, As):
        omegas, As = _check_samples(omegas, As)
        return -float(np.mean(np.linalg.norm(self.predict(omegas) - As, axis=(1, 2))))
