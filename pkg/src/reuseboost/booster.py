"""Agnostic boosting with sample reuse.

Each round draws ``S`` fresh examples, folds them into the relabeled reuse
distribution, feeds ``m`` draws from it to the weak learner, and adds either
the scaled weak hypothesis or ``-sign(H)`` to the ensemble. A fresh holdout
of ``S0`` examples picks the best ``sign(H_t)`` at the end.
"""

import copy
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from sklearn.base import clone

from ._utils import as_rng, hypothesis_values, sign, weighted_corr
from .ensemble import ComponentKind, Ensemble, EnsembleComponent, SignClassifier
from .resampler import ReuseDistribution


class RelabelMode(str, Enum):
    STOCHASTIC = "stochastic"
    FRACTIONAL = "fractional"


class StepMode(str, Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


class BranchMode(str, Enum):
    THRESHOLD = "threshold"
    EMPIRICAL_BEST = "empirical-best"


class WeakLearnerError(RuntimeError):
    def __init__(self, round_index, cause):
        super().__init__(f"weak learner failed in round {round_index}: {cause!r}")
        self.round_index = round_index


DEFAULT_CONSTANTS = {"T": 1.0, "eta": 1.0, "tau": 1.0, "S": 1.0, "S0": 1.0, "m": 1.0}


@dataclass(frozen=True)
class BoostConfig:
    gamma: float = 1.0
    epsilon: float = 0.1
    delta: float = 0.1
    rounds: int = 10
    step: float = 0.1
    mix: float = 0.1
    branch_threshold: float = 0.0
    fresh_per_round: int = 10
    weak_batch: int = 100
    final_holdout: int = 100
    relabel_mode: RelabelMode = RelabelMode.STOCHASTIC
    step_mode: StepMode = StepMode.FIXED
    branch_mode: BranchMode = BranchMode.THRESHOLD
    constants: dict = field(default_factory=lambda: dict(DEFAULT_CONSTANTS))

    def __post_init__(self):
        object.__setattr__(self, "relabel_mode", RelabelMode(self.relabel_mode))
        object.__setattr__(self, "step_mode", StepMode(self.step_mode))
        object.__setattr__(self, "branch_mode", BranchMode(self.branch_mode))
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 < self.mix <= 1:
            raise ValueError("mix (sigma) must lie in (0, 1]")
        if self.step < 0 or self.branch_threshold < 0:
            raise ValueError("step and branch threshold must be non-negative")
        for name in ("rounds", "fresh_per_round", "weak_batch", "final_holdout"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be at least 1")

    @property
    def sample_budget(self):
        return self.rounds * self.fresh_per_round + self.final_holdout

    def with_(self, **changes):
        return replace(self, **changes)


def _count(x):
    # guards against 1600.0000000002 style round-off before taking the ceiling
    return max(1, math.ceil(round(x, 9)))


def default_config(gamma, epsilon, delta=0.1, log_base_size=1.0, oracle_efficient=False,
                   **constants):
    """Parameter preset with every hidden constant exposed (default 1).

    The sample-efficient preset sets ``T = c_T L / (g e)^2``,
    ``eta = c_eta g^2 e / L``, ``S = c_S / (g e)``; the oracle-efficient one
    drops ``L`` from ``T`` and ``eta`` and uses ``S = c_S (L / (g e) + L^3)``.
    Both share ``sigma = eta / g``, ``tau = c_tau g e``, ``S0 = c_S0 / e^2``
    and ``m = c_m / (g e)^2``. ``L`` is the log of the base class size.
    """
    if gamma <= 0 or epsilon <= 0 or log_base_size <= 0 or not 0 < delta < 1:
        raise ValueError("gamma, epsilon, log_base_size must be positive and delta in (0, 1)")
    if gamma > 1:
        raise ValueError("gamma must be at most 1")
    unknown = set(constants) - set(DEFAULT_CONSTANTS)
    if unknown:
        raise ValueError(f"unknown constants: {sorted(unknown)}")
    c = dict(DEFAULT_CONSTANTS, **constants)
    g, e, L = gamma, epsilon, log_base_size
    if oracle_efficient:
        rounds = c["T"] / (g * e) ** 2
        step = c["eta"] * g ** 2 * e
        fresh = c["S"] * (L / (g * e) + L ** 3)
    else:
        rounds = c["T"] * L / (g * e) ** 2
        step = c["eta"] * g ** 2 * e / L
        fresh = c["S"] / (g * e)
    return BoostConfig(
        gamma=g, epsilon=e, delta=delta,
        rounds=_count(rounds), step=step, mix=step / g,
        branch_threshold=c["tau"] * g * e,
        fresh_per_round=_count(fresh),
        final_holdout=_count(c["S0"] / e ** 2),
        weak_batch=_count(c["m"] / (g * e) ** 2),
        constants=c,
    )


def branch(corr_hat, cfg, corr_neg=None):
    """Which component to add this round.

    Threshold mode keeps the weak hypothesis iff its correlation strictly
    exceeds ``tau``. Empirical-best mode keeps whichever of the weak
    hypothesis and ``-sign(H)`` correlates better on the learner's sample.
    """
    if cfg.branch_mode is BranchMode.THRESHOLD:
        return ComponentKind.SCALED_WEAK if corr_hat > cfg.branch_threshold else ComponentKind.NEG_SIGN
    if corr_neg is None:
        raise ValueError("empirical-best branching needs the correlation of -sign(H)")
    return ComponentKind.SCALED_WEAK if corr_hat >= corr_neg else ComponentKind.NEG_SIGN


def adaptive_step(corr_hat, base, mode=StepMode.ADAPTIVE):
    if StepMode(mode) is StepMode.ADAPTIVE:
        return base * max(corr_hat, 0.0)
    return base


def fit_weak(learner, X, y, weights, round_index):
    """Fit a fresh copy of ``learner``; failures carry the round index."""
    try:
        if hasattr(learner, "get_params"):
            return clone(learner).fit(X, y, sample_weight=weights)
        if hasattr(learner, "fit"):
            return copy.deepcopy(learner).fit(X, y, sample_weight=weights)
        return learner(X, y, weights)
    except Exception as exc:
        raise WeakLearnerError(round_index, exc) from exc


def base_hypothesis(W):
    """The fitted hypothesis inside a weak-learner estimator, or ``W`` itself.

    Ensembles store this so that evaluating them skips per-call estimator
    input validation.
    """
    return getattr(W, "hypothesis_", W)


@dataclass(frozen=True)
class RoundTrace:
    round_index: int
    branch: str
    corr_hat: float
    corr_neg: float
    step: float
    train_corr: float


@dataclass
class BoostResult:
    final_hypothesis: SignClassifier
    ensemble: Ensemble
    selected_round: int
    holdout_corrs: np.ndarray
    trace: list
    samples_drawn: int
    algorithm: str = "ours"

    def predict(self, X):
        return self.final_hypothesis.predict(X)


def post_select(ensemble, X0, y0):
    """Index ``t`` (1-based) maximizing holdout correlation of ``sign(H_t)``.

    Candidates run over ``H_1 = 0`` up to the final ensemble; ties go to the
    smallest ``t``.
    """
    prefixes = ensemble.prefix_values(X0)
    corrs = (sign(prefixes) * np.asarray(y0)[None, :]).mean(axis=1)
    return int(np.argmax(corrs)) + 1, corrs


class BoostingRun:
    """Round-by-round state of the sample-reuse booster.

    ``H`` caches the current ensemble value on every stored fresh example,
    so relabeling and the ``-sign(H)`` branch never re-evaluate the full
    ensemble on old data.
    """

    def __init__(self, source, learner, cfg, rng=None):
        self.source = source
        self.learner = learner
        self.cfg = cfg
        self.rng = as_rng(rng)
        self.ensemble = Ensemble()
        self.reuse = ReuseDistribution(cfg.mix)
        self.H = np.zeros(0)
        self._X = []
        self._y = []
        self.samples_drawn = 0
        self.trace = []

    @property
    def t(self):
        return len(self.trace)

    def draw(self, n):
        X, y = self.source.draw(n, self.rng)
        if len(y) != n:
            raise RuntimeError("source returned the wrong number of examples")
        self.samples_drawn += n
        return np.asarray(X), np.asarray(y)

    def stored(self):
        return np.concatenate(self._X), np.concatenate(self._y)

    def push_fresh(self, X, y):
        """Add a fresh batch as the next round of the reuse distribution."""
        if self.t == 0:
            self.reuse.push_round(X, y)
            H_new = np.zeros(len(y))
        else:
            H_prev, direction, step = self.ensemble.last_step(X)
            self.reuse.push_round(X, y, H_prev, direction, step)
            H_new = H_prev + step * direction
        self._X.append(X)
        self._y.append(y)
        self.H = np.concatenate([self.H, H_new])

    def learner_sample(self):
        """The learner's dataset ``(X, y, weights, rows)`` for the current round."""
        if self.cfg.relabel_mode is RelabelMode.STOCHASTIC:
            X, y, rows = self.reuse.sample(self.cfg.weak_batch, self.rng)
            return X, y, np.ones(len(y)), rows
        return self.reuse.fractional_expand()

    def step(self):
        cfg = self.cfg
        t = self.t + 1
        self.push_fresh(*self.draw(cfg.fresh_per_round))
        Xp, yp, wp, rows = self.learner_sample()
        W = fit_weak(self.learner, Xp, yp, wp, t)
        corr_hat = weighted_corr(hypothesis_values(W, Xp), yp, wp)
        corr_neg = weighted_corr(-sign(self.H[rows]), yp, wp)
        kind = branch(corr_hat, cfg, corr_neg)
        chosen = corr_hat if kind is ComponentKind.SCALED_WEAK else corr_neg
        eta = adaptive_step(chosen, cfg.step, cfg.step_mode)
        if kind is ComponentKind.SCALED_WEAK:
            comp = EnsembleComponent(kind, eta, base_hypothesis(W), 1.0 / cfg.gamma)
        else:
            comp = EnsembleComponent(kind, eta)
        X_all, y_all = self.stored()
        self.H = self.H + eta * comp.direction(X_all, self.H)
        self.ensemble.append(comp)
        rec = RoundTrace(t, kind.value, corr_hat, corr_neg, eta,
                         weighted_corr(sign(self.H), y_all))
        self.trace.append(rec)
        return rec

    def finish(self):
        X0, y0 = self.draw(self.cfg.final_holdout)
        k, corrs = post_select(self.ensemble, X0, y0)
        return BoostResult(SignClassifier(self.ensemble, k - 1), self.ensemble, k, corrs,
                           list(self.trace), self.samples_drawn)


def boost(source, learner, cfg, rng=None):
    """Run the sample-reuse booster for ``cfg.rounds`` rounds.

    Draws exactly ``rounds * fresh_per_round + final_holdout`` examples from
    ``source``.
    """
    run = BoostingRun(source, learner, cfg, rng)
    for _ in range(cfg.rounds):
        run.step()
    return run.finish()
