"""Real-valued ensembles of scaled weak hypotheses and neg-sign steps."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._utils import hypothesis_values, sign


class ComponentKind(Enum):
    SCALED_WEAK = "weak"
    NEG_SIGN = "neg-sign"


@dataclass(frozen=True)
class EnsembleComponent:
    kind: ComponentKind
    step: float
    hypothesis: object = None
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("component scale must be positive")
        if self.kind is ComponentKind.SCALED_WEAK and self.hypothesis is None:
            raise ValueError("a scaled weak component needs a hypothesis")

    def direction(self, X, prefix):
        """Value of the (unstepped) direction given the prefix ensemble values."""
        if self.kind is ComponentKind.NEG_SIGN:
            return -sign(prefix).astype(float)
        return self.scale * hypothesis_values(self.hypothesis, X)


class Ensemble:
    """``H = sum_k step_k * h_k``; the empty ensemble is identically zero.

    A neg-sign component evaluates to ``-sign`` of the ensemble prefix that
    strictly precedes it.
    """

    def __init__(self, components=None):
        self.components = list(components or [])

    def __len__(self):
        return len(self.components)

    def append(self, component):
        self.components.append(component)

    def prefix_values(self, X):
        """Array of shape ``(len(self) + 1, n)`` with ``H_1(X), ..., H_{k+1}(X)``."""
        n = len(X)
        out = np.zeros((len(self.components) + 1, n))
        H = np.zeros(n)
        for k, comp in enumerate(self.components):
            H = H + comp.step * comp.direction(X, H)
            out[k + 1] = H
        return out

    def decision_function(self, X, n_components=None):
        comps = self.components if n_components is None else self.components[:n_components]
        H = np.zeros(len(X))
        for comp in comps:
            H = H + comp.step * comp.direction(X, H)
        return H

    def last_step(self, X):
        """``(H_prev, direction, step)`` for the most recent component on ``X``."""
        H = np.zeros(len(X))
        prev, direction, step = H, np.zeros(len(X)), 0.0
        for comp in self.components:
            prev = H
            direction = comp.direction(X, H)
            step = comp.step
            H = H + step * direction
        return prev, direction, step

    def predict(self, X):
        return sign(self.decision_function(X))


class SignClassifier:
    """Binary classifier ``sign(H_k)`` for a fixed prefix of an ensemble."""

    def __init__(self, ensemble, n_components):
        self.ensemble = ensemble
        self.n_components = n_components

    def decision_function(self, X):
        return self.ensemble.decision_function(X, self.n_components)

    def predict(self, X):
        return sign(self.decision_function(X))

    def __call__(self, X):
        return self.predict(X)
