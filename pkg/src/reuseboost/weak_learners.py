"""Weak learners maximizing weighted empirical correlation.

All learners follow the scikit-learn estimator protocol: ``fit(X, y,
sample_weight)`` returns the fitted estimator, which then acts as the weak
hypothesis through ``predict``. Labels are -1/+1 throughout, and
correlation rather than error is the objective (the two are related by
``error = (1 - corr) / 2``).
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._utils import check_pm1, hypothesis_values

_TIE = 1e-12


def _prepare(X, y, sample_weight):
    X = check_array(X, dtype=float)
    y = check_pm1(y)
    if len(y) == 0 or len(y) != len(X):
        raise ValueError("need a nonempty sample with one label per row")
    if sample_weight is None:
        w = np.ones(len(y))
    else:
        w = np.asarray(sample_weight, dtype=float)
        if w.shape != y.shape or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("sample weights must be non-negative with positive total")
    return X, y, w / w.sum()


@dataclass(frozen=True)
class Stump:
    feature_index: int
    threshold: float
    polarity: int

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return self.polarity * np.where(X[:, self.feature_index] - self.threshold >= 0, 1, -1)


@dataclass(frozen=True)
class Parity:
    subset: tuple
    sign: int = 1

    def predict(self, X):
        X = np.asarray(X)
        out = np.ones(len(X), dtype=int)
        for i in self.subset:
            out = out * X[:, i].astype(int)
        return self.sign * out


class TableHypothesis:
    """Binary hypothesis over a finite domain encoded as integer ids in column 0."""

    def __init__(self, table):
        self.table = np.asarray(table, dtype=int)

    def predict(self, X):
        idx = np.asarray(X)[:, 0].astype(int)
        return self.table[idx]

    def __call__(self, X):
        return self.predict(X)

    def __eq__(self, other):
        return isinstance(other, TableHypothesis) and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash(self.table.tobytes())

    def __repr__(self):
        return f"TableHypothesis({self.table.tolist()})"


@dataclass
class FiniteClass:
    hypotheses: list

    def __post_init__(self):
        if len(self.hypotheses) == 0:
            raise ValueError("finite class must be nonempty")

    def __len__(self):
        return len(self.hypotheses)

    def __getitem__(self, i):
        return self.hypotheses[i]

    @classmethod
    def from_table(cls, table):
        return cls([TableHypothesis(row) for row in np.asarray(table)])


def stump_candidates(X, y, w):
    """Every stump candidate and its weighted correlation.

    Thresholds are ``-inf``, midpoints of consecutive distinct values, and
    ``+inf``, for both polarities. Returns parallel arrays
    ``(feature, threshold, polarity, corr)``.
    """
    feats, thrs, pols, corrs = [], [], [], []
    wy = w * y
    total = wy.sum()
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        cum = np.cumsum(wy[order])
        distinct = np.flatnonzero(np.diff(xs) > 0)
        # corr(+1 polarity, thr) = mass at x >= thr minus mass below thr
        below = np.concatenate([[0.0], cum[distinct], [total]])
        thr = np.concatenate([[-np.inf], (xs[distinct] + xs[distinct + 1]) / 2, [np.inf]])
        c = total - 2 * below
        for pol, cc in ((1, c), (-1, -c)):
            feats.append(np.full(len(thr), j))
            thrs.append(thr)
            pols.append(np.full(len(thr), pol))
            corrs.append(cc)
    return (np.concatenate(feats), np.concatenate(thrs), np.concatenate(pols),
            np.concatenate(corrs))


def fit_stump(X, y, sample_weight=None):
    """Best stump under weighted correlation; returns ``(Stump, corr)``.

    Ties go to the lexicographically smallest (feature, threshold, polarity).
    """
    X, y, w = _prepare(X, y, sample_weight)
    f, t, p, c = stump_candidates(X, y, w)
    best = c.max()
    tied = np.flatnonzero(c >= best - _TIE)
    pick = tied[np.lexsort((p[tied], t[tied], f[tied]))[0]]
    return Stump(int(f[pick]), float(t[pick]), int(p[pick])), float(c[pick])


def parity_subsets(n, degree):
    """All subsets of size at most ``degree``, in lexicographic tuple order."""
    subsets = [s for k in range(degree + 1) for s in combinations(range(n), k)]
    return sorted(subsets)


def fit_parity(X, y, degree, sample_weight=None):
    """ERM over ``{+chi_S, -chi_S : |S| <= degree}``; returns ``(Parity, corr)``."""
    X, y, w = _prepare(X, y, sample_weight)
    if not np.all(np.isin(X, (-1.0, 1.0))):
        raise ValueError("parity learning needs features in {-1, +1}")
    n = X.shape[1]
    if not 0 <= degree <= n:
        raise ValueError("degree must lie in [0, n_features]")
    Xi = X.astype(int)
    wy = w * y
    best, best_corr = None, -np.inf
    for subset in parity_subsets(n, degree):
        chi = np.prod(Xi[:, list(subset)], axis=1) if subset else np.ones(len(y), dtype=int)
        c = float(np.dot(wy, chi))
        for sgn in (1, -1):
            if sgn * c > best_corr + _TIE:
                best, best_corr = Parity(subset, sgn), sgn * c
    return best, best_corr


def fit_erm(X, y, hypotheses, sample_weight=None):
    """Index and correlation of the best hypothesis in a finite class.

    Ties go to the lowest index.
    """
    if len(hypotheses) == 0:
        raise ValueError("hypothesis class must be nonempty")
    X, y, w = _prepare(X, y, sample_weight)
    wy = w * y
    corrs = np.array([np.dot(wy, hypothesis_values(h, X)) for h in hypotheses])
    idx = int(np.flatnonzero(corrs >= corrs.max() - _TIE)[0])
    return idx, float(corrs[idx])


class _CorrelationLearner(ClassifierMixin, BaseEstimator):
    classes_ = np.array([-1, 1])

    def predict(self, X):
        check_is_fitted(self, "hypothesis_")
        return self.hypothesis_.predict(check_array(X, dtype=float))


class DecisionStump(_CorrelationLearner):
    """Axis-aligned threshold classifier fitted by exhaustive threshold scan."""

    def fit(self, X, y, sample_weight=None):
        self.hypothesis_, self.corr_ = fit_stump(X, y, sample_weight)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self


class ParityLearner(_CorrelationLearner):
    """Signed parity of at most ``degree`` coordinates on the hypercube."""

    def __init__(self, degree=1):
        self.degree = degree

    def fit(self, X, y, sample_weight=None):
        self.hypothesis_, self.corr_ = fit_parity(X, y, self.degree, sample_weight)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self


class ERMLearner(_CorrelationLearner):
    """Exhaustive empirical risk minimization over an explicit finite class.

    A 1-agnostic weak learner for the class it enumerates.
    """

    def __init__(self, hypotheses=None):
        self.hypotheses = hypotheses

    def fit(self, X, y, sample_weight=None):
        hyps = self.hypotheses
        if hyps is None or len(hyps) == 0:
            raise ValueError("ERMLearner needs a nonempty hypothesis class")
        self.index_, self.corr_ = fit_erm(X, y, hyps, sample_weight)
        self.hypothesis_ = hyps[self.index_]
        return self

    def predict(self, X):
        check_is_fitted(self, "hypothesis_")
        return hypothesis_values(self.hypothesis_, np.asarray(X)).astype(int)
