"""Invariant suite behind ``reuseboost verify``.

Each group checks one property of one module against an independent
computation and reports ``(passed, detail)``. ``level="fast"`` shrinks the
Monte Carlo and random-instance counts so the whole suite runs in well
under a minute; ``level="full"`` uses the sizes of the acceptance suite.
"""

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
from scipy import stats

from . import oracles, rl_sim
from .booster import BoostConfig, BoostingRun, boost
from .data import gen_planted, kfold
from .potential import phi, phi_prime, phi_second
from .resampler import ReuseDistribution, pseudo_label_prob, round_weights
from .sources import CallableSource
from .weak_learners import (ERMLearner, Stump, TableHypothesis, fit_parity, fit_stump,
                            parity_subsets)

LEVELS = {"fast": 0, "full": 1}


@dataclass(frozen=True)
class GroupResult:
    module: str
    invariant: str
    passed: bool
    detail: str
    seconds: float

    @property
    def name(self):
        return f"{self.module}.{self.invariant}"


def _sized(level, fast, full):
    return full if LEVELS[level] else fast


def _random_dist(rng, n_atoms, dim=1):
    X = rng.permutation(4 * n_atoms)[:n_atoms].reshape(-1, 1) if dim == 1 else \
        rng.normal(size=(n_atoms, dim))
    y = rng.choice((-1, 1), size=n_atoms)
    return oracles.FiniteDistribution(X, y, rng.dirichlet(np.ones(n_atoms)))


# potential

def potential_grid(level, rng):
    z = np.linspace(-10, 10, 10_000)
    f, d1, d2 = phi(z), phi_prime(z), phi_second(z)
    ok = (np.all(f >= 0) and np.all((d1 >= -1) & (d1 <= 0)) and np.all((d2 >= 0) & (d2 <= 1))
          and np.all(np.diff(f) <= 0) and phi(0.0) == 2.0)
    return ok, f"min phi={f.min():.3g}, phi' range=[{d1.min():.3g}, {d1.max():.3g}]"


def potential_seam(level, rng):
    h = 1e-14
    gaps = [abs(fn(h) - fn(-h)) for fn in (phi, phi_prime, phi_second)]
    return max(gaps) <= 1e-12, f"max seam gap {max(gaps):.2e}"


def potential_finite_difference(level, rng):
    z = np.linspace(-10, 10, 10_000)
    z = z[np.abs(z) > 1e-4]
    h = 1e-5
    e1 = np.max(np.abs((phi(z + h) - phi(z - h)) / (2 * h) - phi_prime(z)))
    e2 = np.max(np.abs((phi_prime(z + h) - phi_prime(z - h)) / (2 * h) - phi_second(z)))
    return max(e1, e2) <= 1e-6, f"max FD error phi'={e1:.2e}, phi''={e2:.2e}"


def potential_peak(level, rng):
    z = np.linspace(0, 10, 100_001)
    at = z[np.argmax(phi_second(z))]
    err = abs(phi_second(1.0) - math.exp(-1))
    return err <= 1e-12 and abs(at - 1) < 1e-3, f"argmax {at:.4f}, |phi''(1) - 1/e|={err:.1e}"


# resampler

def resampler_flattened_weights(level, rng):
    def recursive(t, sigma):
        probs = {1: Fraction(1)}
        for r in range(2, t + 1):
            probs = {s: (1 - sigma) * p for s, p in probs.items()}
            probs[r] = sigma
        return [probs[s] for s in range(1, t + 1)]

    worst = 0.0
    for t, sigma in product(range(1, 5), (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), 1)):
        ref = recursive(t, Fraction(sigma))
        flat = [(1 - sigma) ** (t - 1)] + [sigma * (1 - sigma) ** (t - s) for s in range(2, t + 1)]
        if flat != ref or sum(flat) != 1:
            return False, f"mismatch at t={t}, sigma={sigma}"
        worst = max(worst, float(np.max(np.abs(round_weights(t, float(sigma)) - np.array(ref, dtype=float)))))
    return worst <= 1e-12, f"float vs rational max gap {worst:.1e}"


def resampler_pseudo_label_range(level, rng):
    # sigma |phi'| + eta phi'' |h| <= sigma + eta |h| / e, so |h| <= e keeps p in [0, 1];
    # with sigma = eta / gamma and |h| = 1 / gamma that means gamma >= 1 / e
    n = _sized(level, 10_000, 100_000)
    gamma = rng.uniform(math.exp(-1), 1, n)
    eta = rng.uniform(1e-3, 1, n)
    sigma = np.minimum(eta / gamma, 1.0)
    eta = sigma * gamma
    g = np.where(rng.random(n) < 0.5, 1.0, 1.0 / gamma) * rng.choice((-1, 1), n)
    p = pseudo_label_prob(rng.choice((-1, 1), n), rng.normal(0, 3, n), g, eta=eta,
                          sigma=sigma, eta_prime=rng.random(n) * eta)
    return bool(np.all((p >= 0) & (p <= 1))), f"{n} draws in [{p.min():.3f}, {p.max():.3f}]"


def _three_point_reuse(rng, sigma=0.4):
    reuse = ReuseDistribution(sigma)
    X = np.array([[0.0], [1.0], [2.0]])
    reuse.push_round(X[[0, 1]], np.array([1, -1]))
    reuse.push_round(X[[1, 2]], np.array([1, 1]), np.array([0.3, -0.2]), np.array([1.0, -1.0]), 0.4)
    reuse.push_round(X[[0, 2]], np.array([-1, 1]), np.array([0.5, 0.1]), np.array([-1.0, 1.0]), 0.4)
    return reuse


def resampler_marginal(level, rng):
    reuse = _three_point_reuse(rng)
    n = _sized(level, 20_000, 100_000)
    Xs, _, _ = reuse.sample(n, rng)
    w = reuse.selection_weights()
    expected = np.zeros(3)
    for wt, rec in zip(w, reuse.rounds):
        for x in rec.X[:, 0]:
            expected[int(x)] += wt / len(rec)
    counts = np.bincount(Xs[:, 0].astype(int), minlength=3)
    pval = stats.chisquare(counts, expected * n).pvalue
    return pval > 1e-3, f"chi-squared p={pval:.3g}"


def resampler_unbiased_fractional(level, rng):
    reuse = _three_point_reuse(rng)
    n = _sized(level, 200_000, 1_000_000)
    h = np.array([1.0, -1.0, 1.0])
    X2, y2, mass, _ = reuse.fractional_expand(normalize=True)
    target = float(np.dot(mass, y2 * h[X2[:, 0].astype(int)]))
    Xs, ys, _ = reuse.sample(n, rng)
    v = ys * h[Xs[:, 0].astype(int)]
    se = v.std(ddof=1) / math.sqrt(n)
    gap = abs(v.mean() - target)
    return gap <= 3 * se, f"gap {gap:.2e} vs 3se {3 * se:.2e}"


# booster

def _planted_run(seed, rounds=6, fixed=True, relabel="stochastic"):
    inst = gen_planted(8, 6, 0.6, seed=seed)
    cfg = BoostConfig(rounds=rounds, step=0.3, mix=0.3, fresh_per_round=20, weak_batch=60,
                      final_holdout=30, relabel_mode=relabel,
                      step_mode="fixed" if fixed else "adaptive")
    return inst, cfg, CallableSource(inst.dist.draw), ERMLearner(list(inst.hypotheses))


def booster_budget(level, rng):
    for seed in range(_sized(level, 3, 10)):
        inst, cfg, src, learner = _planted_run(seed, relabel=("stochastic", "fractional")[seed % 2])
        res = boost(src, learner, cfg, seed)
        if res.samples_drawn != cfg.sample_budget:
            return False, f"seed {seed}: drew {res.samples_drawn}, budget {cfg.sample_budget}"
    return True, "samples_drawn = T*S + S0 on every run"


def booster_ensemble_consistency(level, rng):
    inst, cfg, src, learner = _planted_run(1, rounds=8, fixed=False)
    run = BoostingRun(src, learner, cfg, 1)
    worst = 0.0
    for _ in range(cfg.rounds):
        run.step()
        X_all, _ = run.stored()
        worst = max(worst, float(np.max(np.abs(run.ensemble.decision_function(X_all) - run.H))))
    X = rng.integers(0, 8, size=(100, 1))
    pref = run.ensemble.prefix_values(X)
    for k, comp in enumerate(run.ensemble.components):
        inc = pref[k] + comp.step * comp.direction(X, pref[k])
        worst = max(worst, float(np.max(np.abs(inc - pref[k + 1]))))
    return worst <= 1e-12, f"max cache/recompute gap {worst:.1e}"


def booster_post_selection(level, rng):
    inst, cfg, src, learner = _planted_run(2)
    res = boost(src, learner, cfg, 2)
    best = res.holdout_corrs[res.selected_round - 1]
    first = int(np.flatnonzero(res.holdout_corrs == res.holdout_corrs.max())[0]) + 1
    ok = best == res.holdout_corrs.max() and first == res.selected_round
    return ok, f"selected t={res.selected_round}, holdout corr {best:.3f}"


def booster_smoothness_descent(level, rng):
    worst = -np.inf
    for seed in range(_sized(level, 3, 10)):
        inst, cfg, src, learner = _planted_run(seed, fixed=False)
        res = boost(src, learner, cfg.with_(gamma=0.8), seed)
        pref = res.ensemble.prefix_values(inst.dist.X)
        for k, comp in enumerate(res.ensemble.components):
            h = comp.direction(inst.dist.X, pref[k])
            bound = (oracles.exact_potential(inst.dist, pref[k])
                     + comp.step * oracles.exact_phi_prime(inst.dist, pref[k], h)
                     + comp.step ** 2 * np.max(np.abs(h)) ** 2 / 2)
            worst = max(worst, oracles.exact_potential(inst.dist, pref[k + 1]) - bound)
    return worst <= 1e-12, f"max excess over the quadratic bound {worst:.2e}"


# weak learners

def weak_stump_bruteforce(level, rng):
    for _ in range(_sized(level, 20, 100)):
        n, d = int(rng.integers(1, 30)), int(rng.integers(1, 4))
        X = rng.integers(0, 5, size=(n, d)).astype(float)
        y = rng.choice((-1, 1), n)
        w = rng.random(n)
        _, corr = fit_stump(X, y, w)
        best = -np.inf
        for j in range(d):
            vals = np.unique(X[:, j])
            cuts = np.concatenate([[-np.inf], (vals[1:] + vals[:-1]) / 2, [np.inf]])
            for c, pol in product(cuts, (1, -1)):
                best = max(best, np.dot(w, y * Stump(j, c, pol).predict(X)) / w.sum())
        if abs(best - corr) > 1e-9:
            return False, f"stump corr {corr} vs brute force {best}"
    return True, "fit_stump equals the brute-force maximum"


def weak_parity_enumeration(level, rng):
    for n, d in ((4, 0), (5, 1), (5, 2), (6, 3)):
        count = len(parity_subsets(n, d))
        if count != sum(math.comb(n, k) for k in range(d + 1)):
            return False, f"n={n}, d={d}: enumerated {count} subsets"
        X = rng.choice((-1, 1), size=(40, n))
        y = rng.choice((-1, 1), 40)
        _, corr = fit_parity(X, y, d)
        best = max(s * np.mean(y * np.prod(X[:, list(S)], axis=1)) if S else s * np.mean(y)
                   for S in parity_subsets(n, d) for s in (1, -1))
        if abs(best - corr) > 1e-12:
            return False, f"n={n}, d={d}: {corr} vs {best}"
    return True, "subset census and optimality hold"


# oracles

def oracle_consistency_gap(level, rng):
    worst = np.inf
    for _ in range(_sized(level, 200, 1000)):
        dist = _random_dist(rng, int(rng.integers(1, 9)))
        H = rng.uniform(-3, 3, len(dist))
        h_star = rng.choice((-1, 1), len(dist))
        worst = min(worst, oracles.check_consistency_gap(dist, H, h_star.astype(float)))
    return worst >= -1e-12, f"min slack {worst:.2e}"


def oracle_taylor_identity(level, rng):
    worst = 0.0
    for _ in range(_sized(level, 40, 200)):
        dist = _random_dist(rng, int(rng.integers(2, 7)))
        k = len(dist)
        res = oracles.check_taylor_identity(dist, rng.uniform(-2, 2, k), rng.choice((-1.0, 1.0), k)
                                            * rng.choice((1.0, 2.0)), rng.uniform(0, 1),
                                            rng.choice((-1.0, 1.0), k))
        worst = max(worst, abs(res))
    return worst <= 1e-8, f"max |residual| {worst:.2e}"


def oracle_martingale(level, rng):
    M = _sized(level, 20_000, 100_000)
    failures = []
    for seed in range(_sized(level, 2, 10)):
        probe = martingale_probe(seed, M)
        if not probe.passed:
            failures.append(seed)
    return not failures, "all configurations within 3 stderr" if not failures else \
        f"failed seeds {failures}"


def martingale_probe(seed, M):
    """One random configuration of the martingale check (shared with the tests)."""
    r = np.random.default_rng(1000 + seed)
    inst = gen_planted(4, 3, float(r.uniform(0.2, 0.8)), seed=seed)
    sigma = float(r.uniform(0.2, 0.9))
    gamma = float(r.uniform(0.5, 1.0))
    cfg = BoostConfig(gamma=gamma, rounds=5, step=sigma * gamma, mix=sigma,
                      fresh_per_round=int(r.integers(3, 8)), weak_batch=20, final_holdout=5)
    run = BoostingRun(CallableSource(inst.dist.draw), ERMLearner(list(inst.hypotheses)), cfg,
                      seed)
    for _ in range(int(r.integers(1, 4))):
        run.step()
    h_test = TableHypothesis(r.choice((-1, 1), 4))
    return oracles.check_martingale_recursion(inst.dist, run, h_test, M=M, rng=seed)


def oracle_bounds(level, rng):
    for _ in range(_sized(level, 200, 1000)):
        dist = _random_dist(rng, int(rng.integers(1, 9)))
        H = rng.uniform(-3, 3, len(dist))
        h = rng.uniform(-2, 2, len(dist))
        g = rng.uniform(-2, 2, len(dist))
        eta = rng.uniform(0, 1)
        if abs(oracles.exact_potential(dist, 0.0) - 2) > 1e-12:
            return False, "Phi(0) != 2"
        if abs(oracles.exact_phi_prime(dist, H, h)) > np.abs(h).max() + 1e-12:
            return False, "|Phi'| bound violated"
        if abs(oracles.exact_phi_second(dist, H, h, g)) > np.abs(h).max() * np.abs(g).max() + 1e-12:
            return False, "|Phi''| bound violated"
        lhs = oracles.exact_potential(dist, H + eta * h)
        rhs = (oracles.exact_potential(dist, H) + eta * oracles.exact_phi_prime(dist, H, h)
               + eta ** 2 * np.abs(h).max() ** 2 / 2)
        if lhs > rhs + 1e-12:
            return False, f"smoothness inequality violated by {lhs - rhs:.2e}"
    return True, "potential bounds and smoothness hold"


# data

def data_kfold_partition(level, rng):
    for n, k in ((10, 10), (31, 30), (100, 7)):
        plan = kfold(n, k, seed=int(rng.integers(1000)))
        tests = [t for _, t in plan.splits()]
        sizes = [len(t) for t in tests]
        if sorted(np.concatenate(tests).tolist()) != list(range(n)) or max(sizes) - min(sizes) > 1:
            return False, f"bad partition for n={n}, k={k}"
    return True, "exact partitions with balanced folds"


# rl

def rl_bellman(level, rng):
    worst = 0.0
    for seed in range(_sized(level, 5, 20)):
        mdp = rl_sim.random_mdp(int(rng.integers(1, 7)), float(rng.uniform(0, 0.95)), seed)
        p = rng.random(mdp.n_states)
        V, Q = rl_sim.exact_value(mdp, p), rl_sim.exact_q(mdp, p)
        worst = max(worst, float(np.max(np.abs(V - ((1 - p) * Q[:, 0] + p * Q[:, 1])))))
    return worst <= 1e-10, f"max Bellman gap {worst:.1e}"


def rl_mixture_sampling(level, rng):
    n = _sized(level, 20_000, 100_000)
    pol = rl_sim.MixturePolicy([(0.5, 0.2), (0.3, 1.0), (0.2, np.array([0.0, 0.7]))])
    p = pol.prob_plus(2)[1]
    plus = sum(pol.sample_action(1, 2, rng) == 1 for _ in range(n))
    pval = stats.chisquare([plus, n - plus], [n * p, n * (1 - p)]).pvalue
    return pval > 1e-3, f"chi-squared p={pval:.3g}"


def identity_mdp(discount=0.6):
    """Two states; reward is collected at most once, so ``(1 - beta) R <= 1``.

    State 1 absorbs with zero reward. In state 0, +1 pays 0.6 and moves to
    state 1; -1 pays nothing and stays with probability 0.8.
    """
    P = np.zeros((2, 2, 2))
    P[0, 0] = [0.8, 0.2]
    P[0, 1] = [0.0, 1.0]
    P[1, :, 1] = 1.0
    return rl_sim.TabularMDP(P, [[0.0, 0.6], [0.0, 0.0]], discount, [1.0, 0.0])


def relabel_identity(n, rng, discount=0.6, policy=0.3):
    """Per-state ``(mean y, stderr, (1-beta)(Q+ - Q-), count)`` on :func:`identity_mdp`."""
    mdp = identity_mdp(discount)
    batch = rl_sim.sample_trajectories(mdp, policy, n, rng)
    Q = rl_sim.exact_q(mdp, policy)
    out = {}
    for s in range(mdp.n_states):
        ys = batch.pseudo_actions[batch.states == s]
        if len(ys) > 1:
            out[s] = (ys.mean(), ys.std(ddof=1) / math.sqrt(len(ys)),
                      (1 - discount) * (Q[s, 1] - Q[s, 0]), len(ys))
    return out, batch


def rl_relabel_identity(level, rng):
    out, batch = relabel_identity(_sized(level, 200_000, 1_000_000), rng)
    worst = max(abs(m - target) / se if se > 0 else abs(m - target) / 1e-12
                for m, se, target, _ in out.values())
    ok = worst <= 3 and not batch.clipped.any()
    return ok, f"max |gap|/stderr {worst:.2f}"


def rl_accept_geometric(level, rng):
    beta = 0.7
    batch = rl_sim.sample_trajectories(rl_sim.single_state_mdp(beta), 0.5,
                                       _sized(level, 20_000, 100_000), rng)
    # the accepted index counts failures before the first success of a (1 - beta) coin
    cells = 10
    counts = np.bincount(np.minimum(batch.accept_index, cells), minlength=cells + 1)
    expect = (1 - beta) * beta ** np.arange(cells)
    expect = len(batch) * np.append(expect, beta ** cells)
    pval = stats.chisquare(counts, expect).pvalue
    return pval > 1e-3, f"chi-squared p={pval:.3g} over {cells} cells plus tail"


GROUPS = [
    ("potential", "grid", potential_grid),
    ("potential", "seam", potential_seam),
    ("potential", "finite_difference", potential_finite_difference),
    ("potential", "second_derivative_peak", potential_peak),
    ("resampler", "flattened_weights", resampler_flattened_weights),
    ("resampler", "pseudo_label_range", resampler_pseudo_label_range),
    ("resampler", "feature_marginal", resampler_marginal),
    ("resampler", "fractional_unbiased", resampler_unbiased_fractional),
    ("booster", "budget", booster_budget),
    ("booster", "ensemble_consistency", booster_ensemble_consistency),
    ("booster", "post_selection", booster_post_selection),
    ("booster", "smoothness_descent", booster_smoothness_descent),
    ("weak_learners", "stump_bruteforce", weak_stump_bruteforce),
    ("weak_learners", "parity_enumeration", weak_parity_enumeration),
    ("oracles", "consistency_gap", oracle_consistency_gap),
    ("oracles", "taylor_identity", oracle_taylor_identity),
    ("oracles", "martingale_recursion", oracle_martingale),
    ("oracles", "potential_bounds", oracle_bounds),
    ("data", "kfold_partition", data_kfold_partition),
    ("rl_sim", "bellman", rl_bellman),
    ("rl_sim", "mixture_sampling", rl_mixture_sampling),
    ("rl_sim", "relabel_identity", rl_relabel_identity),
    ("rl_sim", "accept_time_geometric", rl_accept_geometric),
]


def run_suite(level="fast", seed=0, only=None):
    """Run every group (or those whose name starts with ``only``)."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {sorted(LEVELS)}")
    results = []
    for i, (module, invariant, fn) in enumerate(GROUPS):
        name = f"{module}.{invariant}"
        if only and not name.startswith(only):
            continue
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            passed, detail = fn(level, rng)
        except Exception as exc:  # a crashing check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(GroupResult(module, invariant, bool(passed), detail,
                                   time.perf_counter() - t0))
    return results
