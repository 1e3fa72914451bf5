import pickle

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score

from reuseboost import AgnosticBoostClassifier, BHS20Classifier, KK09Classifier
from reuseboost.weak_learners import DecisionStump

ESTIMATORS = [AgnosticBoostClassifier, KK09Classifier, BHS20Classifier]


def _data(n=600, seed=0, noise=0.1):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 3))
    y = np.where(X[:, 1] > 0.2, "spam", "ham")
    flip = rng.random(n) < noise
    return X, np.where(flip, np.where(y == "spam", "ham", "spam"), y)


@pytest.mark.parametrize("cls", ESTIMATORS)
def test_fit_predict_with_string_labels(cls):
    X, y = _data()
    est = cls(n_rounds=10, random_state=0).fit(X, y)
    assert list(est.classes_) == ["ham", "spam"]
    pred = est.predict(X)
    assert set(pred) <= {"ham", "spam"}
    assert np.mean(pred == y) >= 0.8
    assert est.decision_function(X).shape == (len(X),)
    assert est.samples_drawn_ <= len(y)


@pytest.mark.parametrize("cls", ESTIMATORS)
def test_clone_params_and_pickle(cls):
    est = cls(estimator=DecisionStump(), n_rounds=7, random_state=3)
    params = est.get_params()
    assert params["n_rounds"] == 7
    twin = clone(est)
    X, y = _data()
    a = est.fit(X, y).decision_function(X)
    b = twin.fit(X, y).decision_function(X)
    np.testing.assert_array_equal(a, b)
    restored = pickle.loads(pickle.dumps(est))
    np.testing.assert_array_equal(restored.predict(X), est.predict(X))


@pytest.mark.parametrize("cls", ESTIMATORS)
def test_works_inside_cross_validation(cls):
    X, y = _data(seed=1)
    scores = cross_val_score(cls(n_rounds=5, random_state=0), X, y, cv=3)
    assert scores.shape == (3,) and np.all(scores > 0.7)


def test_rejects_non_binary_targets_and_unfitted_use():
    X, _ = _data(30)
    with pytest.raises(ValueError):
        AgnosticBoostClassifier(n_rounds=2).fit(X, np.arange(30) % 3)
    with pytest.raises(Exception):
        AgnosticBoostClassifier().predict(X)


def test_too_small_training_sets_are_rejected():
    X, y = _data(20)
    with pytest.raises(ValueError):
        AgnosticBoostClassifier(n_rounds=50).fit(X, y)
    with pytest.raises(ValueError):
        KK09Classifier(n_rounds=15).fit(X, y)


def test_budget_split_is_exact():
    X, y = _data(1000)
    est = AgnosticBoostClassifier(n_rounds=9, holdout_fraction=0.1, random_state=0).fit(X, y)
    assert est.config_.final_holdout == 100
    assert est.config_.fresh_per_round == 100
    assert est.samples_drawn_ == 9 * 100 + 100
    bh = BHS20Classifier(n_rounds=9, random_state=0).fit(X, y)
    assert bh.samples_drawn_ == 1000
