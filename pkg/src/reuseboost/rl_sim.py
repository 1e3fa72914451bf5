"""Binary-action tabular MDPs, trajectory relabeling and policy boosting.

Actions are -1 and +1 and are stored in that order along the action axis
(index 0 is -1, index 1 is +1). A policy is anything that gives the
probability of action +1 in each state:

* a float, the same probability everywhere;
* an array of length ``n_states``;
* a binary classifier over the one-column state feature matrix
  ``[[0], [1], ...]``, read as the deterministic policy ``s -> h(s)``;
* a :class:`MixturePolicy` of the above.

Rollouts are simulated in batches: all trajectories advance together and
drop out as their geometric clocks stop.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ._utils import as_rng, hypothesis_values
from .booster import BoostConfig, boost

MAX_STEPS = 10 ** 7
ACTIONS = np.array([-1, 1])


class RolloutCapExceeded(RuntimeError):
    pass


def _distribution(p, n, name):
    p = np.asarray(p, dtype=float)
    if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise ValueError(f"{name} must be a probability vector over {n} states")
    return p


@dataclass(frozen=True)
class TabularMDP:
    """``transitions[s, a, s']`` and ``rewards[s, a]`` with ``a`` in (-1, +1) order."""

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float
    start: np.ndarray = None
    reset: np.ndarray = None

    def __post_init__(self):
        P = np.asarray(self.transitions, dtype=float)
        if P.ndim != 3 or P.shape[1] != 2 or P.shape[0] != P.shape[2] or P.shape[0] == 0:
            raise ValueError("transitions must have shape (n_states, 2, n_states)")
        n = P.shape[0]
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1)) > 1e-12:
            raise ValueError("each transition row must be a probability vector")
        r = np.asarray(self.rewards, dtype=float)
        if r.shape != (n, 2) or np.any(r < 0) or np.any(r > 1):
            raise ValueError("rewards must have shape (n_states, 2) with values in [0, 1]")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        uniform = np.full(n, 1.0 / n)
        start = uniform if self.start is None else _distribution(self.start, n, "start")
        reset = start if self.reset is None else _distribution(self.reset, n, "reset")
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "reset", reset)
        object.__setattr__(self, "_cum", np.cumsum(P, axis=2))

    @property
    def n_states(self):
        return self.transitions.shape[0]

    @property
    def state_features(self):
        return np.arange(self.n_states)[:, None]

    def step(self, states, action_idx, rng):
        """Vectorized transition: next states for ``(states, action_idx)`` pairs."""
        u = rng.random(len(states))
        cum = self._cum[states, action_idx]
        nxt = (cum < u[:, None]).sum(axis=1)
        # guards against cumulative sums that end a hair below 1
        return np.minimum(nxt, self.n_states - 1)


def load_mdp(path):
    """Read an MDP from JSON.

    Keys: ``n_states``, ``discount``, ``transitions`` (``[s][a][s']``),
    ``rewards`` (``[s][a]``), optional ``start`` and ``reset``. The action
    axis is ordered (-1, +1).
    """
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
        mdp = TabularMDP(spec["transitions"], spec["rewards"], spec["discount"],
                         spec.get("start"), spec.get("reset"))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed MDP file ({exc})") from None
    if "n_states" in spec and spec["n_states"] != mdp.n_states:
        raise ValueError(f"{path}: n_states disagrees with the transition table")
    return mdp


def save_mdp(mdp, path):
    spec = {"n_states": mdp.n_states, "discount": mdp.discount,
            "transitions": mdp.transitions.tolist(), "rewards": mdp.rewards.tolist(),
            "start": mdp.start.tolist(), "reset": mdp.reset.tolist()}
    Path(path).write_text(json.dumps(spec, indent=2) + "\n", encoding="utf-8")


def single_state_mdp(discount=0.9, reward_plus=1.0, reward_minus=0.0):
    return TabularMDP(np.ones((1, 2, 1)), [[reward_minus, reward_plus]], discount)


def chain_mdp(n_states=5, discount=0.9, slip=0.0):
    """Walk on a line: +1 moves right, -1 moves left, each slipping with
    probability ``slip``. Reward 1 for taking +1 at the right end; episodes
    start at the left end and resets are uniform."""
    P = np.zeros((n_states, 2, n_states))
    for s in range(n_states):
        left, right = max(s - 1, 0), min(s + 1, n_states - 1)
        P[s, 0, left] += 1 - slip
        P[s, 0, right] += slip
        P[s, 1, right] += 1 - slip
        P[s, 1, left] += slip
    r = np.zeros((n_states, 2))
    r[-1, 1] = 1.0
    start = np.zeros(n_states)
    start[0] = 1.0
    return TabularMDP(P, r, discount, start, np.full(n_states, 1.0 / n_states))


def random_mdp(n_states, discount, seed=0):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(n_states), size=(n_states, 2))
    return TabularMDP(P, rng.random((n_states, 2)), discount)


def _base_prob(base, n_states):
    if isinstance(base, MixturePolicy):
        return base.prob_plus(n_states)
    if np.isscalar(base):
        return np.full(n_states, float(base))
    if isinstance(base, np.ndarray):
        if base.shape != (n_states,):
            raise ValueError("a tabular policy needs one probability per state")
        return base.astype(float)
    values = hypothesis_values(base, np.arange(n_states)[:, None])
    return (np.clip(values, -1, 1) + 1) / 2


@dataclass
class MixturePolicy:
    """``pi(+1 | s) = sum_k w_k pi_k(+1 | s)`` over ``(weight, base)`` components."""

    components: list = field(default_factory=list)

    def __post_init__(self):
        self.components = [(float(w), b) for w, b in self.components if w > 0]
        weights = [w for w, _ in self.components]
        if not weights or abs(sum(weights) - 1) > 1e-9:
            raise ValueError("mixture weights must be positive and sum to 1")

    @classmethod
    def uniform(cls):
        return cls([(1.0, 0.5)])

    def prob_plus(self, n_states):
        out = np.zeros(n_states)
        for w, base in self.components:
            out += w * _base_prob(base, n_states)
        return np.clip(out, 0.0, 1.0)

    def mix(self, eta, base):
        """``(1 - eta) * self + eta * base`` as a new policy."""
        if not 0 <= eta <= 1:
            raise ValueError("mixing weight must lie in [0, 1]")
        comps = [((1 - eta) * w, b) for w, b in self.components] + [(eta, base)]
        return MixturePolicy(comps)

    def sample_action(self, state, n_states, rng):
        """Draw a component by weight, then its action in ``state``."""
        weights = np.array([w for w, _ in self.components])
        k = rng.choice(len(weights), p=weights / weights.sum())
        p = _base_prob(self.components[k][1], n_states)[state]
        return 1 if rng.random() < p else -1


def policy_table(policy, n_states):
    """Probability of +1 in every state."""
    p = _base_prob(policy, n_states)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("policy probabilities must lie in [0, 1]")
    return p


def _policy_matrices(mdp, policy):
    p = policy_table(policy, mdp.n_states)
    pi = np.column_stack([1 - p, p])
    P_pi = np.einsum("sa,sat->st", pi, mdp.transitions)
    r_pi = (pi * mdp.rewards).sum(axis=1)
    return pi, P_pi, r_pi


def exact_value(mdp, policy):
    """``V^pi`` from the linear system ``(I - beta P_pi) V = r_pi``."""
    _, P_pi, r_pi = _policy_matrices(mdp, policy)
    A = np.eye(mdp.n_states) - mdp.discount * P_pi
    return np.linalg.solve(A, r_pi)


def exact_q(mdp, policy):
    """``Q^pi[s, a]`` with columns ordered (-1, +1)."""
    V = exact_value(mdp, policy)
    return mdp.rewards + mdp.discount * mdp.transitions @ V


def _actions(p, states, rng):
    return (rng.random(len(states)) < p[states]).astype(int)


def rollout_returns(mdp, policy, episodes, rng=None, start=None, max_steps=MAX_STEPS):
    """Per-episode undiscounted reward sums with termination probability ``1 - beta``.

    Each sum is an unbiased estimate of ``V^pi`` under the start distribution.
    """
    rng = as_rng(rng)
    p = policy_table(policy, mdp.n_states)
    start = mdp.start if start is None else start
    s = rng.choice(mdp.n_states, size=episodes, p=start)
    total = np.zeros(episodes)
    alive = np.arange(episodes)
    for _ in range(max_steps):
        if len(alive) == 0:
            return total
        a = _actions(p, s[alive], rng)
        total[alive] += mdp.rewards[s[alive], a]
        s[alive] = mdp.step(s[alive], a, rng)
        alive = alive[rng.random(len(alive)) < mdp.discount]
    raise RolloutCapExceeded(f"rollout exceeded {max_steps} steps")


def rollout_value(mdp, policy, episodes, rng=None, start=None):
    """Monte Carlo estimate of ``E_{s ~ start} V^pi(s)`` from ``episodes`` rollouts."""
    if episodes < 1:
        raise ValueError("need at least one episode")
    return float(rollout_returns(mdp, policy, episodes, rng, start).mean())


@dataclass(frozen=True)
class TrajectorySample:
    state: int
    q_hat: np.ndarray
    pseudo_action: int
    episode_length: int
    clipped: bool = False


@dataclass
class TrajectoryBatch:
    """Column-wise batch of trajectory samples.

    ``q_hat`` has columns ordered (-1, +1); ``accept_index`` is the time step
    at which the labeled state was accepted.
    """

    states: np.ndarray
    q_hat: np.ndarray
    pseudo_actions: np.ndarray
    episode_lengths: np.ndarray
    accept_index: np.ndarray
    clipped: np.ndarray

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return TrajectorySample(int(self.states[i]), self.q_hat[i].copy(),
                                int(self.pseudo_actions[i]), int(self.episode_lengths[i]),
                                bool(self.clipped[i]))


def sample_trajectories(mdp, policy, n, rng=None, start_dist=None, max_steps=MAX_STEPS):
    """Draw ``n`` independent relabeled states.

    For each trajectory: start from ``start_dist``, pick ``a'`` uniformly,
    follow the policy and accept the current state with probability
    ``1 - beta`` per step, take ``a'`` there and keep following the policy
    with termination probability ``1 - beta``, summing the rewards into
    ``R``. Then ``Q_hat(a') = 2R`` and the label is ``a'`` with probability
    ``(1 - beta) R`` and the other action otherwise. That probability is
    clipped to 1 when ``R`` exceeds ``1 / (1 - beta)``, which ``clipped``
    records.
    """
    rng = as_rng(rng)
    p = policy_table(policy, mdp.n_states)
    start_dist = mdp.start if start_dist is None else start_dist
    beta = mdp.discount
    s = rng.choice(mdp.n_states, size=n, p=start_dist)
    a_prime = rng.integers(0, 2, size=n)
    length = np.zeros(n, dtype=np.int64)
    accept_at = np.zeros(n, dtype=np.int64)

    walking = np.arange(n)
    steps = 0
    while True:
        walking = walking[rng.random(len(walking)) >= 1 - beta]
        if len(walking) == 0:
            break
        steps += 1
        if steps > max_steps:
            raise RolloutCapExceeded(f"trajectory exceeded {max_steps} steps")
        a = _actions(p, s[walking], rng)
        s[walking] = mdp.step(s[walking], a, rng)
        length[walking] += 1
        accept_at[walking] += 1

    states = s.copy()
    R = mdp.rewards[s, a_prime].copy()
    s = mdp.step(s, a_prime, rng)
    length += 1
    alive = np.arange(n)[rng.random(n) < beta]
    while len(alive):
        steps += 1
        if steps > max_steps:
            raise RolloutCapExceeded(f"trajectory exceeded {max_steps} steps")
        a = _actions(p, s[alive], rng)
        R[alive] += mdp.rewards[s[alive], a]
        s[alive] = mdp.step(s[alive], a, rng)
        length[alive] += 1
        alive = alive[rng.random(len(alive)) < beta]

    q_hat = np.zeros((n, 2))
    q_hat[np.arange(n), a_prime] = 2 * R
    accept = (1 - beta) / 2 * q_hat[np.arange(n), a_prime]
    clipped = accept > 1
    keep = rng.random(n) < np.minimum(accept, 1.0)
    chosen = np.where(keep, ACTIONS[a_prime], -ACTIONS[a_prime])
    return TrajectoryBatch(states, q_hat, chosen, length, accept_at, clipped)


def sample_trajectory(mdp, policy, start_dist=None, rng=None):
    """A single :class:`TrajectorySample`."""
    return sample_trajectories(mdp, policy, 1, rng, start_dist)[0]


class TrajectorySource:
    """Booster example source: features are states, labels are pseudo-actions.

    Tracks the number of environment steps consumed and clipping events.
    """

    def __init__(self, mdp, policy, start_dist=None):
        self.mdp = mdp
        self.policy = policy_table(policy, mdp.n_states)
        self.start_dist = start_dist
        self.env_steps = 0
        self.clipped = 0

    def draw(self, n, rng):
        batch = sample_trajectories(self.mdp, self.policy, n, rng, self.start_dist)
        self.env_steps += int(batch.episode_lengths.sum())
        self.clipped += int(batch.clipped.sum())
        return batch.states[:, None], batch.pseudo_actions


class AccessMode(str, Enum):
    EPISODIC = "episodic"
    RESET = "reset"


def default_step_schedule(t):
    return 2.0 / (t + 1)


DEFAULT_RL_CONFIG = BoostConfig(rounds=10, step=0.5, mix=0.5, fresh_per_round=200,
                                weak_batch=400, final_holdout=400,
                                relabel_mode="fractional", branch_mode="empirical-best",
                                step_mode="fixed")


@dataclass
class PolicyBoostResult:
    policy: MixturePolicy
    policies: list
    value_estimates: np.ndarray
    selected_round: int
    env_steps: int
    clipped: int

    def prob_plus(self, n_states):
        return self.policy.prob_plus(n_states)


def boost_policy(mdp, weak_learner, access_mode=AccessMode.EPISODIC, T=10,
                 step_schedule=default_step_schedule, P=1000, booster_cfg=None, rng=None,
                 initial_policy=None):
    """Conservative policy boosting.

    Round ``t`` boosts a classifier ``pi'_t`` over states from trajectory
    samples of ``pi_{t-1}`` started from the access-mode distribution
    (``mdp.start`` or ``mdp.reset``), then mixes
    ``pi_t = (1 - eta_t) pi_{t-1} + eta_t pi'_t``. The returned policy is the
    ``pi_t``, ``t = 1..T``, with the best return over ``P`` fresh rollouts
    from ``mdp.start``; ties go to the earliest round. ``pi_0`` defaults to
    the uniformly random policy.
    """
    if T < 1 or P < 1:
        raise ValueError("need at least one round and one evaluation rollout")
    rng = as_rng(rng)
    cfg = booster_cfg or DEFAULT_RL_CONFIG
    start = mdp.start if AccessMode(access_mode) is AccessMode.EPISODIC else mdp.reset
    policy = initial_policy or MixturePolicy.uniform()
    policies, estimates = [], []
    env_steps = clipped = 0
    for t in range(1, T + 1):
        source = TrajectorySource(mdp, policy, start)
        result = boost(source, weak_learner, cfg, rng)
        env_steps += source.env_steps
        clipped += source.clipped
        policy = policy.mix(step_schedule(t), result.final_hypothesis)
        policies.append(policy)
        estimates.append(rollout_value(mdp, policy, P, rng))
    estimates = np.array(estimates)
    best = int(np.argmax(estimates))
    return PolicyBoostResult(policies[best], policies, estimates, best + 1, env_steps, clipped)
