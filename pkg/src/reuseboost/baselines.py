"""Prior agnostic boosters used as comparators.

Both relabel fractionally with MadaBoost weights ``w = min(1, exp(-y H(x)))``:
each example enters the learner's sample as ``(x, y)`` with mass
``(1 + w)/2`` and as ``(x, -y)`` with mass ``(1 - w)/2``.

``boost_kk09`` draws fresh examples every round, both for the learner and
for the branch decision (the branch batch is redrawn each round, which keeps
the comparison between candidates on IID data). ``boost_bhs20`` draws one
dataset up front and reuses all of it in every round.
"""

import numpy as np

from ._utils import as_rng, hypothesis_values, sign, weighted_corr
from .booster import (BoostResult, RoundTrace, adaptive_step, base_hypothesis, branch,
                      fit_weak, post_select)
from .ensemble import ComponentKind, Ensemble, EnsembleComponent, SignClassifier
from .potential import madaboost_weight


def madaboost_expand(X, y, H):
    """Fractionally relabeled copy of ``(X, y)`` given ensemble values ``H``."""
    w = madaboost_weight(np.asarray(H) * y)
    X2 = np.concatenate([X, X])
    y2 = np.concatenate([y, -y])
    mass = np.concatenate([(1 + w) / 2, (1 - w) / 2])
    return X2, y2, mass


def _component(kind, eta, W, cfg):
    if kind is ComponentKind.SCALED_WEAK:
        return EnsembleComponent(kind, eta, base_hypothesis(W), 1.0 / cfg.gamma)
    return EnsembleComponent(kind, eta)


class _Counter:
    def __init__(self, source, rng):
        self.source, self.rng, self.n = source, rng, 0

    def __call__(self, n):
        X, y = self.source.draw(n, self.rng)
        self.n += n
        return np.asarray(X), np.asarray(y)


def boost_kk09(source, learner, cfg, rng=None, branch_batch=None):
    """Potential-based agnostic boosting with fresh samples every round.

    Per round: ``m = cfg.weak_batch`` examples for the learner and
    ``s = branch_batch`` (default ``m``) examples to pick between the weak
    hypothesis and ``-sign(H)`` by their MadaBoost-weighted correlation.
    Draws ``T (m + s) + S0`` examples in total.
    """
    rng = as_rng(rng)
    draw = _Counter(source, rng)
    m = cfg.weak_batch
    s = branch_batch or m
    ens = Ensemble()
    trace = []
    for t in range(1, cfg.rounds + 1):
        X, y = draw(m)
        X2, y2, mass = madaboost_expand(X, y, ens.decision_function(X))
        W = fit_weak(learner, X2, y2, mass, t)
        Xs, ys = draw(s)
        Hs = ens.decision_function(Xs)
        ws = madaboost_weight(Hs * ys)
        corr_hat = float(np.mean(ws * ys * hypothesis_values(W, Xs)))
        corr_neg = float(np.mean(ws * ys * -sign(Hs)))
        kind = ComponentKind.SCALED_WEAK if corr_hat >= corr_neg else ComponentKind.NEG_SIGN
        eta = adaptive_step(corr_hat if kind is ComponentKind.SCALED_WEAK else corr_neg,
                            cfg.step, cfg.step_mode)
        comp = _component(kind, eta, W, cfg)
        ens.append(comp)
        Hs = Hs + eta * comp.direction(Xs, Hs)
        trace.append(RoundTrace(t, kind.value, corr_hat, corr_neg, eta,
                                weighted_corr(sign(Hs), ys)))
    X0, y0 = draw(cfg.final_holdout)
    k, corrs = post_select(ens, X0, y0)
    return BoostResult(SignClassifier(ens, k - 1), ens, k, corrs, trace, draw.n, "kk09")


def boost_bhs20(source, learner, cfg, rng=None, budget=None, holdout=None):
    """Agnostic boosting that reuses one up-front dataset in every round.

    Draws ``budget`` examples once (default: the sample budget of ``cfg``),
    keeps ``holdout`` (default ``cfg.final_holdout``) of them aside for the
    final selection and relabels the rest against the current ensemble in
    each round. The branch rule follows ``cfg.branch_mode`` on that same
    relabeled set.
    """
    rng = as_rng(rng)
    draw = _Counter(source, rng)
    N = budget or cfg.sample_budget
    S0 = cfg.final_holdout if holdout is None else holdout
    if not 0 < S0 < N:
        raise ValueError("holdout must leave a nonempty training part")
    X, y = draw(N)
    Xt, yt, X0, y0 = X[:N - S0], y[:N - S0], X[N - S0:], y[N - S0:]
    H = np.zeros(len(yt))
    ens = Ensemble()
    trace = []
    for t in range(1, cfg.rounds + 1):
        X2, y2, mass = madaboost_expand(Xt, yt, H)
        W = fit_weak(learner, X2, y2, mass, t)
        corr_hat = weighted_corr(hypothesis_values(W, X2), y2, mass)
        corr_neg = weighted_corr(-sign(np.concatenate([H, H])), y2, mass)
        kind = branch(corr_hat, cfg, corr_neg)
        eta = adaptive_step(corr_hat if kind is ComponentKind.SCALED_WEAK else corr_neg,
                            cfg.step, cfg.step_mode)
        comp = _component(kind, eta, W, cfg)
        H = H + eta * comp.direction(Xt, H)
        ens.append(comp)
        trace.append(RoundTrace(t, kind.value, corr_hat, corr_neg, eta,
                                weighted_corr(sign(H), yt)))
    k, corrs = post_select(ens, X0, y0)
    return BoostResult(SignClassifier(ens, k - 1), ens, k, corrs, trace, draw.n, "bhs20")

