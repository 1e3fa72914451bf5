"""scikit-learn compatible wrappers around the three boosters.

Each classifier turns a fixed training set into a population source that
hands out every example at most once, splits it into per-round fresh batches
and a final holdout, and stores the :class:`~reuseboost.booster.BoostResult`
as ``result_``.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._utils import as_rng, sign
from .baselines import boost_bhs20, boost_kk09
from .booster import BoostConfig, boost
from .sources import ArraySource
from .weak_learners import DecisionStump


class _BoostingClassifier(ClassifierMixin, BaseEstimator):

    def _encode(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise ValueError(f"binary labels required, got {len(self.classes_)} classes")
        self.n_features_in_ = X.shape[1]
        return X, np.where(y == self.classes_[1], 1, -1)

    def _split_sizes(self, n):
        holdout = max(1, int(round(self.holdout_fraction * n)))
        per_round = (n - holdout) // self.n_rounds
        if per_round < 1:
            raise ValueError(f"{n} examples cannot feed {self.n_rounds} rounds plus a holdout")
        return per_round, holdout

    def decision_function(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X)
        return self.result_.final_hypothesis.decision_function(X)

    def predict(self, X):
        return self.classes_[(sign(self.decision_function(X)) > 0).astype(int)]

    @property
    def samples_drawn_(self):
        check_is_fitted(self, "result_")
        return self.result_.samples_drawn


class AgnosticBoostClassifier(_BoostingClassifier):
    """Sample-reuse agnostic booster.

    The training set is split into ``n_rounds`` fresh batches plus a holdout
    of ``holdout_fraction`` of the data for the final selection.
    ``weak_batch`` is the number of draws from the reuse distribution handed
    to the learner in stochastic mode (default: the training size).

    Parameters mirror :class:`~reuseboost.booster.BoostConfig`.
    """

    def __init__(self, estimator=None, n_rounds=50, sigma=0.25, eta=1.0, gamma=1.0, tau=0.0,
                 relabel="fractional", branch="empirical-best", step="adaptive",
                 weak_batch=None, holdout_fraction=0.1, random_state=None):
        self.estimator = estimator
        self.n_rounds = n_rounds
        self.sigma = sigma
        self.eta = eta
        self.gamma = gamma
        self.tau = tau
        self.relabel = relabel
        self.branch = branch
        self.step = step
        self.weak_batch = weak_batch
        self.holdout_fraction = holdout_fraction
        self.random_state = random_state

    def fit(self, X, y):
        X, y = self._encode(X, y)
        rng = as_rng(self.random_state)
        per_round, holdout = self._split_sizes(len(y))
        self.config_ = BoostConfig(
            gamma=self.gamma, rounds=self.n_rounds, step=self.eta, mix=self.sigma,
            branch_threshold=self.tau, fresh_per_round=per_round,
            weak_batch=self.weak_batch or len(y), final_holdout=holdout,
            relabel_mode=self.relabel, step_mode=self.step, branch_mode=self.branch)
        source = ArraySource(X, y, random_state=rng.integers(2 ** 32))
        self.result_ = boost(source, self.estimator or DecisionStump(), self.config_, rng)
        return self


class KK09Classifier(_BoostingClassifier):
    """Fresh-samples-every-round baseline; each round's batch is split between
    the learner and the branch decision by ``branch_fraction``."""

    def __init__(self, estimator=None, n_rounds=50, eta=1.0, gamma=1.0, step="adaptive",
                 branch_fraction=0.5, holdout_fraction=0.1, random_state=None):
        self.estimator = estimator
        self.n_rounds = n_rounds
        self.eta = eta
        self.gamma = gamma
        self.step = step
        self.branch_fraction = branch_fraction
        self.holdout_fraction = holdout_fraction
        self.random_state = random_state

    def fit(self, X, y):
        X, y = self._encode(X, y)
        rng = as_rng(self.random_state)
        per_round, holdout = self._split_sizes(len(y))
        if per_round < 2:
            raise ValueError("each round needs at least two fresh examples")
        s = min(per_round - 1, max(1, int(round(self.branch_fraction * per_round))))
        self.config_ = BoostConfig(gamma=self.gamma, rounds=self.n_rounds, step=self.eta,
                                   mix=1.0, fresh_per_round=per_round,
                                   weak_batch=per_round - s, final_holdout=holdout,
                                   step_mode=self.step)
        source = ArraySource(X, y, random_state=rng.integers(2 ** 32))
        self.result_ = boost_kk09(source, self.estimator or DecisionStump(), self.config_, rng,
                                  branch_batch=s)
        return self


class BHS20Classifier(_BoostingClassifier):
    """Full-reuse baseline: every round relabels the whole training part."""

    def __init__(self, estimator=None, n_rounds=50, eta=1.0, gamma=1.0, step="adaptive",
                 branch="empirical-best", holdout_fraction=0.1, random_state=None):
        self.estimator = estimator
        self.n_rounds = n_rounds
        self.eta = eta
        self.gamma = gamma
        self.step = step
        self.branch = branch
        self.holdout_fraction = holdout_fraction
        self.random_state = random_state

    def fit(self, X, y):
        X, y = self._encode(X, y)
        rng = as_rng(self.random_state)
        n = len(y)
        holdout = max(1, int(round(self.holdout_fraction * n)))
        if holdout >= n:
            raise ValueError("holdout leaves no training data")
        self.config_ = BoostConfig(gamma=self.gamma, rounds=self.n_rounds, step=self.eta,
                                   mix=1.0, final_holdout=holdout, step_mode=self.step,
                                   branch_mode=self.branch)
        source = ArraySource(X, y, random_state=rng.integers(2 ** 32))
        self.result_ = boost_bhs20(source, self.estimator or DecisionStump(), self.config_, rng,
                                   budget=n, holdout=holdout)
        return self
