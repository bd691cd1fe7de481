"""Stateless multi-armed bandits over the (P_cs, P_tx) arm grid, plus regret accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .macsim import Action


@dataclass(frozen=True)
class ArmGrid:
    """Arms as (P_cs, P_tx) pairs, indexed cs-major: ``k = i_cs * L_tx + i_tx``."""

    actions: tuple[Action, ...]

    def __len__(self):
        return len(self.actions)

    def __getitem__(self, k) -> Action:
        return self.actions[k]

    @property
    def n_arms(self) -> int:
        return len(self.actions)

    @classmethod
    def from_pairs(cls, pairs) -> ArmGrid:
        """Explicit list of ``(p_tx_dbm, p_cs_dbm)`` pairs."""
        acts = tuple(Action(float(tx), float(cs)) for tx, cs in pairs)
        if not acts:
            raise ConfigError("arm list is empty", "actions")
        return cls(acts)


def levels(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` uniformly spaced values from ``lo`` to ``hi`` inclusive; ``n == 1`` gives ``[lo]``."""
    if n < 1:
        raise ConfigError("need at least one level")
    if lo > hi:
        raise ConfigError(f"min {lo} exceeds max {hi}")
    if n == 1:
        return np.array([float(lo)])
    step = (hi - lo) / (n - 1)
    out = lo + step * np.arange(n)
    out[-1] = hi
    return out


def build_arm_grid(p_cs_min, p_cs_max, n_cs, p_tx_min, p_tx_max, n_tx) -> ArmGrid:
    cs = levels(p_cs_min, p_cs_max, n_cs)
    tx = levels(p_tx_min, p_tx_max, n_tx)
    return ArmGrid(tuple(Action(float(t), float(c)) for c in cs for t in tx))


def full_grid() -> ArmGrid:
    """21 x 21 grid over [-82, -62] dBm CCA and [1, 21] dBm TP in 1 dB steps."""
    return build_arm_grid(-82.0, -62.0, 21, 1.0, 21.0, 21)


def reduced_grid() -> ArmGrid:
    """CCA fixed at -82 dBm, TP in {15, ..., 21} dBm."""
    return build_arm_grid(-82.0, -82.0, 1, 15.0, 21.0, 7)


class EpsilonGreedy:
    """Sample-average values with annealed exploration ``eps_t = eps0 / sqrt(t)``."""

    def __init__(self, n_arms, epsilon0=1.0, rng=None):
        if not 0 <= epsilon0 <= 1:
            raise ConfigError("epsilon0 must lie in [0, 1]", "epsilon0")
        self.n_arms = n_arms
        self.epsilon0 = epsilon0
        self.epsilon = epsilon0
        self.rng = np.random.default_rng(rng)
        self.Q = np.zeros(n_arms)
        self.N = np.zeros(n_arms, dtype=np.int64)

    def select(self, t, context=None) -> int:
        if t < 1:
            raise ValueError("steps are counted from 1")
        self.epsilon = self.epsilon0 / math.sqrt(t)
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(self.n_arms))
        return int(np.argmax(self.Q))

    def update(self, arm, reward, context=None) -> None:
        self.N[arm] += 1
        self.Q[arm] += (reward - self.Q[arm]) / self.N[arm]


def cooperative_reward(rewards, m, beta) -> float:
    """Own reward plus ``beta`` times the mean reward of the other agents."""
    rewards = np.asarray(rewards, dtype=float)
    M = rewards.size
    if beta == 0:
        return float(rewards[m])
    if M < 2:
        raise ConfigError("cooperation weight needs at least two agents", "beta")
    others = (rewards.sum() - rewards[m]) / (M - 1)
    return float(rewards[m] + beta * others)


class CoopEpsilonGreedy(EpsilonGreedy):
    """Epsilon-greedy whose value update mixes in the other agents' rewards."""

    def __init__(self, n_arms, epsilon0=1.0, beta=0.5, rng=None):
        super().__init__(n_arms, epsilon0, rng)
        self.beta = beta

    def update_coop(self, arm, rewards, m) -> None:
        self.update(arm, cooperative_reward(rewards, m, self.beta))


def coop_egreedy_update(agents, m, arm, rewards, beta) -> None:
    agents[m].update(arm, cooperative_reward(rewards, m, beta))


class UCB:
    """``argmax Q + c sqrt(ln t / N)`` after one forced pull of every arm in index order."""

    def __init__(self, n_arms, c=1.0, rng=None):
        self.n_arms = n_arms
        self.c = c
        self.Q = np.zeros(n_arms)
        self.N = np.zeros(n_arms, dtype=np.int64)
        self._unpulled = 0

    def select(self, t, context=None) -> int:
        if t < 1:
            raise ValueError("steps are counted from 1")
        while self._unpulled < self.n_arms and self.N[self._unpulled] > 0:
            self._unpulled += 1
        if self._unpulled < self.n_arms:
            return self._unpulled
        return int(np.argmax(self.Q + self.c * np.sqrt(math.log(t) / self.N)))

    def update(self, arm, reward, context=None) -> None:
        self.N[arm] += 1
        self.Q[arm] += (reward - self.Q[arm]) / self.N[arm]


class Thompson:
    """Beta-Bernoulli posterior sampling.

    Rewards are divided by ``reward_scale`` and clipped to [0, 1]; fractional rewards
    are binarized with one Bernoulli draw.
    """

    def __init__(self, n_arms, reward_scale=1.0, rng=None):
        self.n_arms = n_arms
        self.reward_scale = reward_scale
        self.rng = np.random.default_rng(rng)
        self.alpha = np.ones(n_arms)
        self.beta = np.ones(n_arms)

    def select(self, t=None, context=None) -> int:
        return int(np.argmax(self.rng.beta(self.alpha, self.beta)))

    def update(self, arm, reward, context=None) -> None:
        r = min(max(reward / self.reward_scale, 0.0), 1.0)
        if r == 0.0 or r == 1.0:
            b = r
        else:
            b = float(self.rng.random() < r)
        self.alpha[arm] += b
        self.beta[arm] += 1.0 - b


class FixedPolicy:
    """Always plays one arm; used for no-learning baselines."""

    def __init__(self, arm):
        self.arm = arm

    def select(self, t=None, context=None) -> int:
        return self.arm

    def update(self, arm, reward, context=None) -> None:  # pragma: no cover - guarded by harness
        raise RuntimeError("fixed baselines never learn")


class BernoulliBandit:
    """Stationary Bernoulli arms with known means (synthetic regret studies)."""

    def __init__(self, means, rng=None):
        self.means = np.asarray(means, dtype=float)
        self.rng = np.random.default_rng(rng)

    def pull(self, arm) -> float:
        return float(self.rng.random() < self.means[arm])


class RegretLedger:
    """Cumulative expected regret ``sum_t (mu* - mu_{a_t})``, summed over agents.

    ``means`` is ``(n_arms,)`` for a single agent or ``(n_agents, n_arms)``. Without
    means the regret is unavailable and :meth:`regret` returns ``None``.
    """

    def __init__(self, means=None):
        self.means = None if means is None else np.atleast_2d(np.asarray(means, dtype=float))
        self._per_step: list[float] = []

    def record(self, arms) -> None:
        if self.means is None:
            return
        arms = np.atleast_1d(arms)
        best = self.means.max(axis=1)
        got = self.means[np.arange(len(arms)), arms]
        self._per_step.append(float(np.sum(best - got)))

    def curve(self):
        if self.means is None:
            return None
        return np.cumsum(self._per_step)

    def regret(self, T=None):
        if self.means is None:
            return None
        steps = self._per_step if T is None else self._per_step[:T]
        return float(np.sum(steps))
