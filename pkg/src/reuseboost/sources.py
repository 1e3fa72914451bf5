"""Population samplers feeding the boosters.

A source exposes ``draw(n, rng) -> (X, y)`` returning ``n`` labeled examples
with -1/+1 labels. Boosters never see a fixed training set directly; they
only ask a source for fresh examples and count how many they asked for.
"""

import numpy as np

from ._utils import check_pm1


class SourceExhausted(RuntimeError):
    pass


class ArraySource:
    """Draws without replacement from a fixed sample, in a seeded random order.

    Models a finite data budget: every example is handed out at most once,
    and asking for more than remain raises :class:`SourceExhausted`.
    """

    def __init__(self, X, y, random_state=None):
        self.X = np.asarray(X)
        self.y = check_pm1(y)
        rng = np.random.default_rng(random_state)
        self._order = rng.permutation(len(self.y))
        self._pos = 0

    @property
    def remaining(self):
        return len(self._order) - self._pos

    def draw(self, n, rng=None):
        if n > self.remaining:
            raise SourceExhausted(f"asked for {n} examples, {self.remaining} left")
        idx = self._order[self._pos:self._pos + n]
        self._pos += n
        return self.X[idx], self.y[idx]


class ResamplingSource:
    """IID draws with replacement from a fixed sample (its empirical distribution)."""

    def __init__(self, X, y):
        self.X = np.asarray(X)
        self.y = check_pm1(y)

    def draw(self, n, rng):
        idx = rng.integers(0, len(self.y), size=n)
        return self.X[idx], self.y[idx]


class CallableSource:
    """Wraps ``fn(n, rng) -> (X, y)``."""

    def __init__(self, fn):
        self.fn = fn

    def draw(self, n, rng):
        X, y = self.fn(n, rng)
        return np.asarray(X), check_pm1(y)
