import math

import numpy as np
import pytest

from reuseboost.booster import (BoostConfig, BoostingRun, BranchMode, StepMode, WeakLearnerError,
                                adaptive_step, boost, branch, default_config, post_select)
from reuseboost.data import gen_planted
from reuseboost.ensemble import ComponentKind, Ensemble, EnsembleComponent
from reuseboost.oracles import exact_phi_prime, exact_potential
from reuseboost.sources import ArraySource, CallableSource, SourceExhausted
from reuseboost.weak_learners import DecisionStump, ERMLearner


def _separable(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 1))
    return X, np.where(X[:, 0] >= 0.1, 1, -1)


def test_default_config_unit_scaling():
    cfg = default_config(1, 1, 0.1, 1)
    assert (cfg.rounds, cfg.step, cfg.mix, cfg.branch_threshold) == (1, 1, 1, 1)
    assert (cfg.fresh_per_round, cfg.final_holdout) == (1, 1)


def test_default_config_formula():
    cfg = default_config(0.5, 0.1, log_base_size=4)
    assert cfg.rounds == 1600 and cfg.fresh_per_round == 20
    assert cfg.mix == pytest.approx(cfg.step / 0.5)
    assert cfg.step == pytest.approx(0.25 * 0.1 / 4)


def test_default_config_epsilon_scaling():
    a = default_config(0.5, 0.05, log_base_size=2)
    b = default_config(0.5, 0.1, log_base_size=2)
    assert a.fresh_per_round == 2 * b.fresh_per_round
    assert a.rounds == 4 * b.rounds
    assert a.final_holdout == 4 * b.final_holdout


def test_default_config_oracle_efficient_and_constants():
    cfg = default_config(0.5, 0.1, log_base_size=2, oracle_efficient=True, S=2.0)
    assert cfg.rounds == 400
    assert cfg.fresh_per_round == math.ceil(2 * (2 / 0.05 + 8))
    assert cfg.step == pytest.approx(0.25 * 0.1)
    with pytest.raises(ValueError):
        default_config(0.5, 0.1, bogus=1)
    with pytest.raises(ValueError):
        default_config(1.5, 0.1)
    with pytest.raises(ValueError):
        default_config(0.5, -0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        BoostConfig(mix=0)
    with pytest.raises(ValueError):
        BoostConfig(rounds=0)
    with pytest.raises(ValueError):
        BoostConfig(branch_threshold=-1)
    assert BoostConfig(rounds=3, fresh_per_round=7, final_holdout=5).sample_budget == 26


@pytest.mark.parametrize("corr, expected", [
    (0.05, ComponentKind.NEG_SIGN),
    (1.0, ComponentKind.SCALED_WEAK),
    (-0.3, ComponentKind.NEG_SIGN),
])
def test_threshold_branch(corr, expected):
    assert branch(corr, BoostConfig(branch_threshold=0.05)) is expected


def test_empirical_best_branch():
    cfg = BoostConfig(branch_mode=BranchMode.EMPIRICAL_BEST)
    assert branch(0.2, cfg, 0.3) is ComponentKind.NEG_SIGN
    assert branch(0.3, cfg, 0.3) is ComponentKind.SCALED_WEAK
    with pytest.raises(ValueError):
        branch(0.3, cfg)


@pytest.mark.parametrize("corr, base, expected", [(0.0, 0.3, 0.0), (1.0, 0.3, 0.3),
                                                  (0.5, 0.2, 0.1), (-0.4, 0.2, 0.0)])
def test_adaptive_step(corr, base, expected):
    assert adaptive_step(corr, base) == pytest.approx(expected)
    assert adaptive_step(corr, base, StepMode.FIXED) == base


def test_empty_ensemble_is_zero_and_neg_sign_is_minus_one():
    X = np.zeros((3, 1))
    ens = Ensemble()
    np.testing.assert_array_equal(ens.decision_function(X), 0.0)
    ens.append(EnsembleComponent(ComponentKind.NEG_SIGN, 0.5))
    np.testing.assert_array_equal(ens.decision_function(X), -0.5)
    with pytest.raises(ValueError):
        EnsembleComponent(ComponentKind.SCALED_WEAK, 0.1)
    with pytest.raises(ValueError):
        EnsembleComponent(ComponentKind.NEG_SIGN, 0.1, scale=0)


def test_separable_single_round_is_perfect():
    X, y = _separable()
    cfg = BoostConfig(rounds=1, step=1.0, fresh_per_round=150, weak_batch=500, final_holdout=50)
    res = boost(ArraySource(X, y, random_state=0), DecisionStump(), cfg, np.random.default_rng(0))
    assert res.selected_round == 2
    assert np.mean(res.predict(X) == y) == 1.0


def test_random_labels_have_no_holdout_correlation():
    rng = np.random.default_rng(1)
    S0 = 2000

    def draw(n, r):
        return r.normal(size=(n, 2)), r.choice((-1, 1), n)

    cfg = BoostConfig(rounds=5, step=0.3, fresh_per_round=50, weak_batch=100, final_holdout=S0)
    res = boost(CallableSource(draw), DecisionStump(), cfg, rng)
    X, y = draw(S0, np.random.default_rng(99))
    assert abs(np.mean(y * res.predict(X))) <= 3 / math.sqrt(S0)


@pytest.mark.parametrize("mode", ["stochastic", "fractional"])
def test_budget_is_exact(mode):
    X, y = _separable(1000)
    cfg = BoostConfig(rounds=7, fresh_per_round=13, weak_batch=40, final_holdout=21,
                      relabel_mode=mode)
    res = boost(ArraySource(X, y, random_state=0), DecisionStump(), cfg, np.random.default_rng(0))
    assert res.samples_drawn == 7 * 13 + 21


def test_source_exhaustion_raises():
    X, y = _separable(50)
    cfg = BoostConfig(rounds=5, fresh_per_round=10, final_holdout=10)
    with pytest.raises(SourceExhausted):
        boost(ArraySource(X, y), DecisionStump(), cfg, np.random.default_rng(0))


def test_learner_failure_carries_round():
    calls = []

    def learner(X, y, w):
        calls.append(1)
        if len(calls) == 3:
            raise RuntimeError("boom")
        return lambda Z: np.ones(len(Z))

    X, y = _separable(500)
    with pytest.raises(WeakLearnerError) as info:
        boost(ArraySource(X, y), learner, BoostConfig(rounds=5), np.random.default_rng(0))
    assert info.value.round_index == 3


def test_incremental_cache_matches_recomputation():
    X, y = _separable(600)
    cfg = BoostConfig(rounds=8, step=0.4, fresh_per_round=40, weak_batch=60,
                      branch_threshold=0.2)
    run = BoostingRun(ArraySource(X, y, random_state=1), DecisionStump(), cfg,
                      np.random.default_rng(1))
    for _ in range(cfg.rounds):
        run.step()
        Xs, _ = run.stored()
        np.testing.assert_allclose(run.H, run.ensemble.decision_function(Xs), atol=1e-12)
    Z = np.random.default_rng(2).uniform(-1, 1, size=(100, 1))
    prefixes = run.ensemble.prefix_values(Z)
    for k, comp in enumerate(run.ensemble.components):
        step = comp.step * comp.direction(Z, prefixes[k])
        np.testing.assert_allclose(prefixes[k + 1], prefixes[k] + step, atol=1e-12)


def test_post_selection_dominates_every_candidate():
    X, y = _separable(2000, seed=3)
    y = np.where(np.random.default_rng(3).random(len(y)) < 0.2, -y, y)
    cfg = BoostConfig(rounds=10, step=0.3, fresh_per_round=100, weak_batch=200,
                      final_holdout=500)
    res = boost(ArraySource(X, y, random_state=0), DecisionStump(), cfg, np.random.default_rng(0))
    assert res.holdout_corrs[res.selected_round - 1] == res.holdout_corrs.max()
    assert len(res.holdout_corrs) == cfg.rounds + 1


def test_post_selection_ties_go_to_first_round():
    ens = Ensemble([EnsembleComponent(ComponentKind.NEG_SIGN, 0.5)] * 2)
    k, corrs = post_select(ens, np.zeros((4, 1)), np.array([1, -1, 1, -1]))
    assert k == 1 and np.all(corrs == 0)


def test_smoothness_descent_on_exact_oracle():
    inst = gen_planted(8, 10, 0.6, seed=4)
    gamma = 1.0
    cfg = BoostConfig(gamma=gamma, rounds=12, step=0.2, mix=0.2, fresh_per_round=20,
                      weak_batch=100, branch_threshold=0.05)
    run = BoostingRun(inst.dist, ERMLearner(inst.hypotheses), cfg, np.random.default_rng(4))
    for _ in range(cfg.rounds):
        run.step()
    X = inst.dist.X
    prefixes = run.ensemble.prefix_values(X)
    for k, comp in enumerate(run.ensemble.components):
        h = comp.direction(X, prefixes[k])
        lhs = exact_potential(inst.dist, prefixes[k + 1])
        rhs = (exact_potential(inst.dist, prefixes[k])
               + comp.step * exact_phi_prime(inst.dist, prefixes[k], h)
               + comp.step ** 2 / (2 * gamma ** 2))
        assert lhs <= rhs + 1e-12


@pytest.mark.parametrize("mode", ["stochastic", "fractional"])
def test_identical_seeds_give_identical_traces(mode):
    X, y = _separable(800)
    cfg = BoostConfig(rounds=6, fresh_per_round=50, weak_batch=80, relabel_mode=mode,
                      step_mode="adaptive", branch_mode="empirical-best")

    def run():
        return boost(ArraySource(X, y, random_state=5), DecisionStump(), cfg,
                     np.random.default_rng(5))

    a, b = run(), run()
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.holdout_corrs, b.holdout_corrs)
