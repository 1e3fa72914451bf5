"""The recursively relabeled sampling distribution used by the booster.

Round ``t`` of the booster draws a fresh batch and defines a distribution
``D_t`` that, with probability ``1 - sigma``, falls back to ``D_{t-1}`` and
otherwise relabels an example of the fresh batch with a pseudo label whose
bias depends on the first and second derivative of the potential at the
previous ensemble. Unrolling the recursion gives fixed round-selection
weights, so a draw picks a round first and then one of its stored examples;
this is what :class:`ReuseDistribution` does, with the ensemble margins
cached per stored example when the round is pushed.
"""

from dataclasses import dataclass, field

import numpy as np

from ._utils import check_pm1
from .potential import phi_prime, phi_second


class InvalidPseudoLabel(ValueError):
    """A pseudo-label probability fell outside [0, 1]."""


@dataclass(frozen=True)
class PseudoLabelParams:
    eta: float
    sigma: float
    eta_prime: float = 0.0

    def __post_init__(self):
        if not 0 <= self.eta_prime <= self.eta:
            raise ValueError("eta_prime must lie in [0, eta]")
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must lie in (0, 1]")


def pseudo_label_prob(y, h_prev_margin, dir_value, params=None, *, eta=None, sigma=None,
                      eta_prime=None):
    """Probability that the relabeled example gets pseudo label +1.

    Works elementwise on arrays. Either pass a :class:`PseudoLabelParams` or
    the three scalars (``eta_prime`` may then be an array).
    """
    if params is not None:
        eta, sigma, eta_prime = params.eta, params.sigma, params.eta_prime
    y = np.asarray(y, dtype=float)
    H = np.asarray(h_prev_margin, dtype=float)
    g = np.asarray(dir_value, dtype=float)
    eta_prime = np.asarray(eta_prime, dtype=float)
    num = sigma * phi_prime(y * H) * y + eta * phi_second(y * (H + eta_prime * g)) * g
    p = 0.5 - num / (2.0 * (eta + sigma))
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise InvalidPseudoLabel(
            "pseudo-label probability outside [0, 1]; check sigma, eta and the "
            "magnitude of the previous direction")
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def expected_relabel_sign(y, h_prev_margin, h_curr_margin, sigma, eta):
    """Mean pseudo label ``E[2p - 1]`` with ``eta'`` integrated out in closed form.

    Equals ``y * w / (eta + sigma)`` with
    ``w = (1 - sigma) phi'(y H_prev) - phi'(y H_curr)``.
    """
    y = np.asarray(y, dtype=float)
    return y * fractional_weight(y, h_prev_margin, h_curr_margin, sigma) / (eta + sigma)


def fractional_weight(y, h_prev_margin, h_curr_margin, sigma):
    """Relabeling weight ``(1 - sigma) phi'(H_prev y) - phi'(H_curr y)``."""
    y = np.asarray(y, dtype=float)
    return ((1.0 - sigma) * phi_prime(np.asarray(h_prev_margin) * y)
            - phi_prime(np.asarray(h_curr_margin) * y))


def round_weights(n_rounds, sigma):
    """Flattened selection weights of rounds 1..n_rounds.

    Round 1 gets ``(1 - sigma)^(t-1)``, round ``s >= 2`` gets
    ``sigma (1 - sigma)^(t-s)``; they telescope to 1.
    """
    if n_rounds < 1:
        raise ValueError("need at least one round")
    s = np.arange(1, n_rounds + 1)
    w = sigma * (1.0 - sigma) ** (n_rounds - s)
    w[0] = (1.0 - sigma) ** (n_rounds - 1)
    return w


@dataclass
class RoundRecord:
    """Fresh batch of one round with the margins cached at push time.

    ``h_prev`` holds ``H_{s-1}(x)``, ``direction`` holds ``h_{s-1}(x)`` and
    ``step`` the step that was applied along it. Round 1 keeps them at zero
    and is never relabeled.
    """

    round_index: int
    X: np.ndarray
    y: np.ndarray
    h_prev: np.ndarray
    direction: np.ndarray
    step: float

    def __post_init__(self):
        if len(self.X) == 0:
            raise ValueError("fresh batch must be nonempty")
        if not (np.all(np.isfinite(self.h_prev)) and np.all(np.isfinite(self.direction))):
            raise ValueError("cached margins must be finite")
        if self.step < 0:
            raise ValueError("step must be non-negative")

    @property
    def h_curr(self):
        return self.h_prev + self.step * self.direction

    def __len__(self):
        return len(self.y)


@dataclass
class ReuseDistribution:
    sigma: float
    rounds: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must lie in (0, 1]")
        self._offsets = [0]

    @property
    def current_round(self):
        return len(self.rounds)

    @property
    def n_stored(self):
        return self._offsets[-1]

    def push_round(self, X, y, h_prev=None, direction=None, step=0.0):
        X = np.asarray(X)
        y = check_pm1(y)
        n = len(y)
        if h_prev is None:
            h_prev = np.zeros(n)
        if direction is None:
            direction = np.zeros(n)
        rec = RoundRecord(self.current_round + 1, X, y,
                          np.asarray(h_prev, dtype=float), np.asarray(direction, dtype=float),
                          float(step))
        self.rounds.append(rec)
        self._offsets.append(self._offsets[-1] + n)
        return rec

    def selection_weights(self):
        return round_weights(self.current_round, self.sigma)

    def stored(self):
        """All stored examples stacked in round order, with their round index."""
        X = np.concatenate([r.X for r in self.rounds])
        y = np.concatenate([r.y for r in self.rounds])
        rid = np.concatenate([np.full(len(r), r.round_index) for r in self.rounds])
        return X, y, rid

    def _cached(self):
        h_prev = np.concatenate([r.h_prev for r in self.rounds])
        direction = np.concatenate([r.direction for r in self.rounds])
        step = np.concatenate([np.full(len(r), r.step) for r in self.rounds])
        return h_prev, direction, step

    def sample(self, count, rng):
        """Draw ``count`` IID relabeled examples.

        Returns ``(X, y_hat, rows)`` where ``rows`` indexes the stored examples
        (in the order of :meth:`stored`).
        """
        if not self.rounds:
            raise ValueError("cannot sample from an empty distribution")
        weights = self.selection_weights()
        sizes = np.diff(self._offsets)
        which = rng.choice(len(weights), size=count, p=weights)
        u = rng.random(count)
        rows = np.asarray(self._offsets[:-1])[which] + np.floor(u * sizes[which]).astype(int)
        X, y, _ = self.stored()
        h_prev, direction, step = self._cached()
        y_hat = y[rows].copy()
        relabel = which > 0
        if np.any(relabel):
            r = rows[relabel]
            eta_prime = rng.random(int(relabel.sum())) * step[r]
            p = np.atleast_1d(pseudo_label_prob(y[r], h_prev[r], direction[r], eta=step[r],
                                                sigma=self.sigma, eta_prime=eta_prime))
            coins = rng.random(len(r))
            y_hat[relabel] = np.where(coins < p, 1, -1)
        return X[rows], y_hat, rows

    def fractional_expand(self, ensemble=None, normalize=False):
        """Deterministic weighted dataset replacing stochastic relabeling.

        Each stored ``(x, y)`` of round ``s >= 2`` is emitted as ``(x, y)`` and
        ``(x, -y)`` with masses ``(1 + w)/2`` and ``(1 - w)/2`` times the
        round's selection weight over the batch size, with ``w`` from
        :func:`fractional_weight`. Round-1 examples keep their label with
        full mass. ``normalize=True`` divides ``w`` by ``eta + sigma`` so the
        expansion matches :meth:`sample` in expectation.

        Returns ``(X, y, weight, rows)`` with rows ``[0, n)`` carrying the
        original labels and rows ``[n, 2n)`` the flipped ones.
        """
        if not self.rounds:
            raise ValueError("cannot expand an empty distribution")
        X, y, rid = self.stored()
        h_prev, direction, step = self._cached()
        if ensemble is not None:
            self._check_consistent(ensemble)
        w = np.ones(len(y))
        later = rid > 1
        if np.any(later):
            h_curr = h_prev + step * direction
            w_later = fractional_weight(y[later], h_prev[later], h_curr[later], self.sigma)
            if normalize:
                w_later = w_later / (step[later] + self.sigma)
            w[later] = w_later
        sizes = np.diff(self._offsets)
        base = (self.selection_weights() / sizes)[rid - 1]
        rows = np.arange(len(y))
        X2 = np.concatenate([X, X])
        y2 = np.concatenate([y, -y])
        mass = np.concatenate([base * (1 + w) / 2, base * (1 - w) / 2])
        return X2, y2, mass, np.concatenate([rows, rows])

    def _check_consistent(self, ensemble):
        """Cached margins of the latest round must agree with the ensemble."""
        rec = self.rounds[-1]
        if rec.round_index == 1:
            return
        H_now = np.asarray(ensemble.decision_function(rec.X), dtype=float)
        if not np.allclose(H_now, rec.h_curr, atol=1e-9):
            raise ValueError("round snapshots are inconsistent with the given ensemble")
