"""Exact population functionals on finite distributions.

Everything here is computed by enumerating atoms, with compensated
summation, so it can serve as ground truth for the sampling-based code.
The relabeling expectations over ``eta'`` are taken by numerical
quadrature on purpose: the resampler has a closed form for them, and the
checks are more useful when they do not share it.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._utils import check_pm1, hypothesis_values, sign
from .booster import StepMode
from .potential import phi, phi_prime, phi_second


class QuadratureError(RuntimeError):
    pass


@dataclass
class FiniteDistribution:
    """Distribution over finitely many ``(x, y)`` atoms."""

    X: np.ndarray
    y: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = check_pm1(self.y)
        self.probs = np.asarray(self.probs, dtype=float)
        if not (len(self.X) == len(self.y) == len(self.probs)) or len(self.y) == 0:
            raise ValueError("atoms need matching features, labels and probabilities")
        if np.any(self.probs < 0) or abs(math.fsum(self.probs) - 1) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        keys = np.column_stack([self.X.reshape(len(self.y), -1), self.y])
        if len(np.unique(keys, axis=0)) != len(self.y):
            raise ValueError("atoms must be distinct")

    def __len__(self):
        return len(self.y)

    def draw(self, n, rng):
        idx = rng.choice(len(self.y), size=n, p=self.probs)
        return self.X[idx], self.y[idx]

    def expect(self, values):
        """Compensated ``sum_i p_i v_i``."""
        return math.fsum(np.asarray(self.probs) * np.asarray(values, dtype=float))


def _real(H, X):
    # ensembles H are read through decision_function; test hypotheses h through predict
    return hypothesis_values(H, X, real=True)


def _vals(h, X):
    return hypothesis_values(h, X)


def exact_corr(dist, h):
    return dist.expect(dist.y * _vals(h, dist.X))


def exact_loss(dist, h):
    """0-1 loss of a binary hypothesis."""
    return dist.expect(dist.y != hypothesis_values(h, dist.X))


def exact_potential(dist, H):
    return dist.expect(phi(dist.y * _real(H, dist.X)))


def exact_phi_prime(dist, H, h):
    """``E[phi'(y H(x)) y h(x)]``."""
    return dist.expect(phi_prime(dist.y * _real(H, dist.X)) * dist.y * _vals(h, dist.X))


def exact_phi_second(dist, H, h, g):
    """``E[phi''(y H(x)) h(x) g(x)]``."""
    return dist.expect(phi_second(dist.y * _real(H, dist.X)) * _vals(h, dist.X) * _vals(g, dist.X))


def best_in_class(dist, hypotheses):
    """``(index, corr)`` of the best hypothesis; lowest index on ties."""
    corrs = [exact_corr(dist, h) for h in hypotheses]
    best = max(corrs)
    idx = next(i for i, c in enumerate(corrs) if c >= best - 1e-12)
    return idx, corrs[idx]


def check_consistency_gap(dist, H, h_star):
    """Slack of the potential/correlation-gap inequality.

    Returns ``Phi'(H, sign H) - Phi'(H, h*) - (corr(h*) - corr(sign H))``,
    which is never negative for binary ``h*``.
    """
    Hv = _real(H, dist.X)
    sH = sign(Hv).astype(float)
    hs = hypothesis_values(h_star, dist.X)
    lhs = exact_phi_prime(dist, Hv, sH) - exact_phi_prime(dist, Hv, hs)
    rhs = dist.expect(dist.y * hs) - dist.expect(dist.y * sH)
    return lhs - rhs


def _segment_integral(y, H, g, weight, upper):
    """``int_0^upper phi''(y (H + e g)) * weight de`` for one atom by quadrature."""
    if upper == 0 or g == 0 or weight == 0:
        return 0.0
    points = None
    kink = -H / g
    if 0 < kink < upper:
        points = [kink]
    val, err = integrate.quad(lambda e: phi_second(y * (H + e * g)) * weight, 0.0, upper,
                              points=points, epsabs=1e-13, epsrel=1e-12, limit=200)
    if err > 1e-10:
        raise QuadratureError(f"quadrature error estimate {err:.3g} above 1e-10")
    return val


def check_taylor_identity(dist, H_prev, h_dir, eta, h_test):
    """Residual of the integral form of the first-order expansion.

    ``Phi'(H + eta g, h) - Phi'(H, h) - eta E_{eta'~U[0, eta]} Phi''(H + eta' g, h, g)``
    with the ``eta'`` expectation taken by adaptive quadrature.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    Hv = _real(H_prev, dist.X)
    g = _vals(h_dir, dist.X)
    hv = _vals(h_test, dist.X)
    direct = exact_phi_prime(dist, Hv + eta * g, hv)
    integrals = [_segment_integral(dist.y[i], Hv[i], g[i], hv[i] * g[i], eta)
                 for i in range(len(dist))]
    return direct - (exact_phi_prime(dist, Hv, hv) + dist.expect(integrals))


def relabel_mean_quad(y, H_prev, direction, eta, sigma):
    """``E_{eta'}[2 p - 1]`` for one stored example, by quadrature over ``eta'``."""
    integral = _segment_integral(y, H_prev, direction, direction, eta)
    return -(sigma * phi_prime(y * H_prev) * y + integral) / (eta + sigma)


def exact_reuse_corr(reuse, h):
    """``corr_{D_t}(h)`` of a realized reuse distribution, averaging out all relabel coins."""
    weights = reuse.selection_weights()
    total = []
    for w, rec in zip(weights, reuse.rounds):
        hv = _vals(h, rec.X)
        if rec.round_index == 1:
            means = rec.y.astype(float)
        else:
            means = np.array([relabel_mean_quad(rec.y[i], rec.h_prev[i], rec.direction[i],
                                                rec.step, reuse.sigma) for i in range(len(rec))])
        total.append(w * math.fsum(means * hv) / len(rec))
    return math.fsum(total)


@dataclass
class MartingaleProbe:
    """Outcome of a Monte Carlo check of ``E_{t-1}[Delta_t] = (1 - sigma) Delta_{t-1}``."""

    delta_prev: float
    target: float
    estimate: float
    stderr: float
    replications: int

    @property
    def gap(self):
        return abs(self.estimate - self.target)

    @property
    def passed(self):
        return self.gap <= 3 * self.stderr + 1e-12


def check_martingale_recursion(dist, run, h_test, M=100_000, rng=None):
    """Replay the next round of ``run`` ``M`` times with fresh batches from ``dist``.

    ``run`` is a :class:`~reuseboost.booster.BoostingRun` drawing from
    ``dist`` that has completed ``t - 1 >= 1`` rounds with a fixed step. With
    ``Delta_t = Phi'(H_t, h) + (1 + eta/sigma) corr_{D_t}(h)``, only the fresh
    batch of round ``t`` is random given the past (the learner's resample
    does not enter ``D_t``), so each replication draws a batch, evaluates
    ``corr_{D_t}(h)`` exactly, and the average is compared with
    ``(1 - sigma) Delta_{t-1}``.
    """
    if M < 1:
        raise ValueError("need at least one replication")
    if run.t < 1:
        raise ValueError("the run must have completed at least one round")
    if run.cfg.step_mode is not StepMode.FIXED:
        raise ValueError("the recursion needs a fixed step size")
    rng = np.random.default_rng(rng)
    sigma, eta = run.cfg.mix, run.cfg.step
    scale = 1.0 + eta / sigma
    ens = run.ensemble
    # H_{t-1}, h_{t-1} and the step that produced H_t
    H_prev, direction, step = ens.last_step(dist.X)
    H_t = H_prev + step * direction
    hv = _vals(h_test, dist.X)

    corr_prev = exact_reuse_corr(run.reuse, h_test)
    delta_prev = exact_phi_prime(dist, H_prev, hv) + scale * corr_prev

    per_atom = np.array([relabel_mean_quad(dist.y[i], H_prev[i], direction[i], step, sigma)
                         for i in range(len(dist))]) * hv
    S = run.cfg.fresh_per_round
    counts = rng.multinomial(S, dist.probs, size=M)
    fresh = counts @ per_atom / S
    deltas = exact_phi_prime(dist, H_t, hv) + scale * ((1 - sigma) * corr_prev + sigma * fresh)
    return MartingaleProbe(delta_prev, (1 - sigma) * delta_prev, float(deltas.mean()),
                           float(deltas.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0, M)
