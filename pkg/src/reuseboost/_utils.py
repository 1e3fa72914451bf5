import numpy as np


def sign(values):
    """Sign with the convention sign(0) = +1."""
    return np.where(np.asarray(values) >= 0, 1, -1)


def hypothesis_values(h, X, real=False):
    """Evaluate a hypothesis on a feature matrix.

    Accepts an object with ``predict``, a plain callable, a constant, or a
    precomputed array holding one value per row of ``X``. With
    ``real=True`` a ``decision_function`` is preferred, which is how
    real-valued ensembles are evaluated. Returns a float array of length
    ``len(X)``.
    """
    if np.isscalar(h):
        return np.full(len(X), float(h))
    if isinstance(h, np.ndarray):
        if h.shape != (len(X),):
            raise ValueError("a precomputed hypothesis needs one value per row")
        return h.astype(float)
    if real and hasattr(h, "decision_function"):
        out = h.decision_function(X)
    elif hasattr(h, "predict"):
        out = h.predict(X)
    elif callable(h):
        out = h(X)
    else:
        raise TypeError(f"cannot evaluate hypothesis of type {type(h).__name__}")
    out = np.asarray(out, dtype=float).reshape(-1)
    if out.shape[0] != len(X):
        raise ValueError("hypothesis returned the wrong number of values")
    return out


def weighted_corr(pred, y, weights=None):
    """Weighted empirical correlation ``sum(w * y * h) / sum(w)``."""
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if weights is None:
        return float(np.mean(y * pred))
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise ValueError("weights must have positive total mass")
    return float(np.dot(weights, y * pred) / total)


def check_pm1(y, name="y"):
    y = np.asarray(y)
    if y.size and not np.all(np.isin(y, (-1, 1))):
        raise ValueError(f"{name} must contain only -1/+1 labels")
    return y.astype(int)


def as_rng(random_state):
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)
