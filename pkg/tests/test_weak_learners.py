import itertools

import numpy as np
import pytest

from reuseboost.data import gen_planted
from reuseboost.oracles import best_in_class, exact_corr
from reuseboost.weak_learners import (DecisionStump, ERMLearner, FiniteClass, Parity,
                                      ParityLearner, Stump, TableHypothesis, fit_erm, fit_parity,
                                      fit_stump, parity_subsets)

XOR_X = np.array([[-1, -1], [1, 1], [-1, 1], [1, -1]], dtype=float)
XOR_Y = np.array([1, 1, -1, -1])


def test_stump_perfect_split():
    stump, corr = fit_stump([[-1.0], [1.0]], [-1, 1])
    assert stump == Stump(0, 0.0, 1)
    assert corr == 1.0


def test_stump_all_positive_uses_lower_sentinel():
    stump, corr = fit_stump([[0.3], [2.0], [-1.0]], [1, 1, 1])
    assert corr == 1.0
    assert stump.threshold == -np.inf and stump.polarity == 1


def test_stump_xor_best_is_zero():
    # brute force: 2 features x 3 thresholds x 2 polarities, all tie at 0
    _, corr = fit_stump(XOR_X, XOR_Y)
    assert corr == pytest.approx(0.0, abs=1e-12)
    best = max(np.mean(XOR_Y * p * np.where(XOR_X[:, j] >= t, 1, -1))
               for j in range(2) for t in (-np.inf, 0.0, np.inf) for p in (1, -1))
    assert best == pytest.approx(0.0, abs=1e-12)


def test_stump_prediction_sign_convention():
    s = Stump(0, 0.5, -1)
    np.testing.assert_array_equal(s.predict([[0.5], [0.4]]), [-1, 1])


def _brute_stump(X, y, w):
    best = -np.inf
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        thr = np.concatenate([[-np.inf], (vals[:-1] + vals[1:]) / 2, [np.inf]])
        for t in thr:
            for pol in (1, -1):
                best = max(best, float(np.sum(w * y * pol * np.where(X[:, j] >= t, 1, -1))))
    return best


@pytest.mark.parametrize("seed", range(20))
def test_stump_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 51))
    X = rng.integers(0, 6, size=(n, 3)).astype(float)
    y = rng.choice((-1, 1), n)
    w = rng.random(n)
    stump, corr = fit_stump(X, y, w)
    assert corr == pytest.approx(_brute_stump(X, y, w / w.sum()), abs=1e-12)
    assert np.dot(w / w.sum(), y * stump.predict(X)) == pytest.approx(corr, abs=1e-12)


def test_stump_tie_break_is_lexicographic():
    # both features split perfectly; feature 0 must win
    stump, _ = fit_stump([[0.0, 0.0], [1.0, 1.0]], [-1, 1])
    assert stump.feature_index == 0


def test_learners_reject_bad_input():
    with pytest.raises(ValueError):
        fit_stump(np.zeros((0, 1)), [])
    with pytest.raises(ValueError):
        fit_stump([[0.0]], [1], sample_weight=[0.0])
    with pytest.raises(ValueError):
        fit_parity([[0.5, 1.0]], [1], 1)
    with pytest.raises(ValueError):
        fit_erm([[0]], [1], [])


def test_parity_xor():
    p, corr = fit_parity(XOR_X, XOR_Y, 2)
    assert p == Parity((0, 1), 1) and corr == 1.0
    _, corr1 = fit_parity(XOR_X, XOR_Y, 1)
    assert corr1 == pytest.approx(0.0, abs=1e-12)
    best1 = max(s * np.mean(XOR_Y * np.prod(XOR_X[:, list(S)], axis=1))
                for S in [(), (0,), (1,)] for s in (1, -1))
    assert best1 == pytest.approx(0.0, abs=1e-12)


def test_parity_single_coordinate():
    X = np.array(list(itertools.product((-1, 1), repeat=5)), dtype=float)
    p, corr = fit_parity(X, X[:, 3].astype(int), 1)
    assert p.subset == (3,) and p.sign == 1 and corr == 1.0


@pytest.mark.parametrize("n, d", [(4, 0), (4, 2), (6, 3), (5, 5)])
def test_parity_enumeration_count(n, d):
    from math import comb
    assert len(parity_subsets(n, d)) == sum(comb(n, k) for k in range(d + 1))


def test_parity_never_beaten():
    rng = np.random.default_rng(2)
    X = rng.choice((-1.0, 1.0), size=(60, 5))
    y = rng.choice((-1, 1), 60)
    _, corr = fit_parity(X, y, 2)
    for S in parity_subsets(5, 2):
        chi = np.prod(X[:, list(S)], axis=1) if S else np.ones(60)
        assert abs(np.mean(y * chi)) <= corr + 1e-12


def test_erm_symmetric_pair():
    h = TableHypothesis([1, -1, 1])
    neg = TableHypothesis([-1, 1, -1])
    X = np.array([[0], [1], [2]])
    for y in ([1, 1, 1], [-1, -1, 1], [1, -1, 1]):
        idx, corr = fit_erm(X, y, [h, neg])
        assert corr >= 0


def test_erm_finds_perfect_hypothesis():
    table = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [-1, -1, 1, 1]])
    X = np.arange(4)[:, None]
    idx, corr = fit_erm(X, table[2], FiniteClass.from_table(table))
    assert idx == 2 and corr == 1.0


def test_erm_matches_independent_enumeration():
    rng = np.random.default_rng(7)
    table = rng.choice((-1, 1), size=(20, 8))
    y = rng.choice((-1, 1), 8)
    idx, corr = fit_erm(np.arange(8)[:, None], y, FiniteClass.from_table(table))
    scores = [sum(int(a) * int(b) for a, b in zip(row, y)) / 8 for row in table.tolist()]
    assert idx == scores.index(max(scores))
    assert corr == pytest.approx(max(scores))


def test_erm_weak_learning_contract():
    inst = gen_planted(16, 32, 0.7, seed=0)
    _, best = best_in_class(inst.dist, inst.hypotheses)
    rng = np.random.default_rng(0)
    learner = ERMLearner(inst.hypotheses)
    good = 0
    for _ in range(100):
        X, y = inst.dist.draw(400, rng)
        W = learner.fit(X, y)
        good += exact_corr(inst.dist, W.hypothesis_) >= best - 0.15
    assert good >= 95


def test_estimators_follow_sklearn_protocol():
    from sklearn.base import clone
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([-1, -1, 1, 1])
    for est in (DecisionStump(), ParityLearner(degree=1)):
        data = X if isinstance(est, DecisionStump) else np.where(X > 1.5, 1.0, -1.0)
        fitted = clone(est).fit(data, y, sample_weight=np.ones(4))
        np.testing.assert_array_equal(fitted.predict(data), y)
    assert ParityLearner(degree=3).get_params() == {"degree": 3}
    with pytest.raises(ValueError):
        ERMLearner().fit(X, y)
