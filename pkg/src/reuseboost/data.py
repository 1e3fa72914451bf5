"""Datasets, label noise, fold plans and synthetic generators."""

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._utils import check_pm1, sign
from .oracles import FiniteDistribution, exact_corr
from .weak_learners import FiniteClass


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DataError("features must form a 2-D array")
        y = check_pm1(self.y)
        if len(X) != len(y):
            raise DataError("one label per row is required")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def feature_dim(self):
        return self.X.shape[1]

    def __len__(self):
        return len(self.y)

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx])


def _parse_label(raw, encoding, lineno):
    if raw in encoding:
        return encoding[raw]
    try:
        num = float(raw)
    except ValueError:
        num = None
    for key, val in encoding.items():
        try:
            if num is not None and float(key) == num:
                return val
        except (TypeError, ValueError):
            continue
    raise DataError(f"line {lineno}: label {raw!r} is not in the declared encoding")


def load_csv(path, label_column=-1, label_encoding=None, header=False):
    """Read a comma-separated file of numeric features and a binary label.

    ``label_encoding`` maps the two raw label values to -1/+1; when omitted
    the two distinct values are sorted and mapped to -1 and +1 in that
    order. UTF-8 with LF or CRLF line endings.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in r)]
    if header and rows:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width < 2:
        raise DataError(f"{path}: need at least one feature and a label")
    col = label_column % width
    raw_labels = []
    feats = []
    for lineno, row in rows:
        if len(row) != width:
            raise DataError(f"line {lineno}: expected {width} fields, found {len(row)}")
        raw_labels.append(row[col].strip())
        try:
            feats.append([float(v) for j, v in enumerate(row) if j != col])
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    if label_encoding is None:
        distinct = sorted(set(raw_labels), key=_sort_key)
        if len(distinct) != 2:
            raise DataError(f"{path}: expected two distinct labels, found {len(distinct)}; "
                            "pass label_encoding explicitly")
        label_encoding = {distinct[0]: -1, distinct[1]: 1}
    else:
        if len(label_encoding) != 2 or set(label_encoding.values()) != {-1, 1}:
            raise DataError("label encoding must map exactly two values onto -1 and +1")
        label_encoding = {str(k): v for k, v in label_encoding.items()}
    labels = [_parse_label(r, label_encoding, lineno) for (lineno, _), r in zip(rows, raw_labels)]
    return Dataset(np.array(feats), np.array(labels))


def _sort_key(raw):
    try:
        return (0, float(raw), "")
    except ValueError:
        return (1, 0.0, raw)


def save_csv(data, path, header=False):
    """Write features followed by the -1/+1 label; round-trips through :func:`load_csv`."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        if header:
            out.writerow([f"x{j}" for j in range(data.feature_dim)] + ["label"])
        for x, y in zip(data.X, data.y):
            out.writerow([repr(float(v)) for v in x] + [int(y)])


@dataclass(frozen=True)
class NoisePlan:
    rate: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.rate <= 0.5:
            raise DataError("noise rate must lie in [0, 0.5]")


def inject_noise(data, plan):
    """Flip each label independently with probability ``plan.rate``."""
    if plan.rate == 0:
        return data
    rng = np.random.default_rng(plan.seed)
    flips = rng.random(len(data)) < plan.rate
    return Dataset(data.X.copy(), np.where(flips, -data.y, data.y))


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignment: np.ndarray

    def splits(self):
        """Yield ``(train_idx, test_idx)`` for each fold."""
        idx = np.arange(len(self.assignment))
        for f in range(self.k):
            test = self.assignment == f
            yield idx[~test], idx[test]


def kfold(n, k, seed=0):
    """Seeded partition of ``range(n)`` into ``k`` folds whose sizes differ by at most one."""
    n = len(n) if hasattr(n, "__len__") else int(n)
    if not 1 <= k <= n:
        raise DataError(f"cannot split {n} examples into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[perm] = np.arange(n) % k
    return FoldPlan(k, seed, assignment)


def hypercube(n):
    """All points of ``{-1, +1}^n`` in lexicographic order."""
    return np.array(list(itertools.product((-1, 1), repeat=n)), dtype=int)


def halfspace_labels(X, w, theta):
    return sign(np.asarray(X, dtype=float) @ np.asarray(w, dtype=float) - theta)


def gen_halfspace(n, w=None, theta=0.0, corrupt_rate=0.0):
    """Uniform hypercube marginal with halfspace labels flipped at rate ``corrupt_rate``.

    Enumerates all ``2^n`` points (two atoms per point when the corruption
    rate is positive). The default weight vector is all ones, i.e. majority.
    """
    if n > 24:
        raise DataError("enumeration is limited to n <= 24; use halfspace_sampler")
    if not 0 <= corrupt_rate <= 0.5:
        raise DataError("corruption rate must lie in [0, 0.5]")
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    X = hypercube(n)
    clean = halfspace_labels(X, w, theta)
    base = 0.5 ** n
    if corrupt_rate == 0:
        return FiniteDistribution(X, clean, np.full(len(X), base))
    return FiniteDistribution(np.concatenate([X, X]), np.concatenate([clean, -clean]),
                              np.concatenate([np.full(len(X), base * (1 - corrupt_rate)),
                                              np.full(len(X), base * corrupt_rate)]))


def halfspace_sampler(n, w=None, theta=0.0, corrupt_rate=0.0):
    """``draw(m, rng)`` sampler for the same distribution, for any ``n``."""
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)

    def draw(m, rng):
        X = rng.choice((-1, 1), size=(m, n))
        y = halfspace_labels(X, w, theta)
        flips = rng.random(m) < corrupt_rate
        return X, np.where(flips, -y, y)

    return draw


@dataclass
class PlantedInstance:
    dist: FiniteDistribution
    hypotheses: FiniteClass
    best_index: int

    @property
    def best(self):
        return self.hypotheses[self.best_index]


def gen_planted(domain_size, class_size, best_corr, seed=0, max_tries=100):
    """Random finite class over a uniform domain with one planted best member.

    Features are the domain ids ``0..domain_size-1`` (one column). Labels
    follow the planted hypothesis, flipped with probability
    ``(1 - best_corr) / 2``, so its correlation is exactly ``best_corr``.
    """
    if not 0 <= best_corr <= 1:
        raise DataError("best_corr must lie in [0, 1]")
    if domain_size < 1 or class_size < 1:
        raise DataError("domain and class must be nonempty")
    rng = np.random.default_rng(seed)
    flip = (1 - best_corr) / 2
    X = np.arange(domain_size)[:, None]
    base = 1.0 / domain_size
    for _ in range(max_tries):
        table = rng.choice((-1, 1), size=(class_size, domain_size))
        star = int(rng.integers(class_size))
        clean = table[star]
        if flip == 0:
            dist = FiniteDistribution(X, clean, np.full(domain_size, base))
        else:
            dist = FiniteDistribution(np.concatenate([X, X]), np.concatenate([clean, -clean]),
                                      np.concatenate([np.full(domain_size, base * (1 - flip)),
                                                      np.full(domain_size, base * flip)]))
        cls = FiniteClass.from_table(table)
        corrs = [exact_corr(dist, h) for h in cls]
        if max(corrs) <= corrs[star] + 1e-12:
            return PlantedInstance(dist, cls, star)
    raise DataError("could not plant a best hypothesis; try another seed")
