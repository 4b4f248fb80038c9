"""Discrete baseline learners for the matrix-game comparison: joint-action
learning (JAL), win-or-learn-fast policy hill climbing (WoLF-PHC), frequency
maximum Q (FMQ), and the empirical-model ablation of the main learner.

Hyperparameters the original papers leave open (epsilon schedule, learning
rate) are shared across all baselines for fairness and recorded in run
metadata by the harness. All learners are deterministic under a fixed seed
and keep their policies on the simplex after every update.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .qlearner import QLearnerConfig, RommeoQLearner, Transition


@dataclass
class EpsilonSchedule:
    """Exponentially decaying exploration rate, stepped per episode."""

    start: float = 0.2
    end: float = 0.01
    decay: float = 0.95

    def value(self, episode: int) -> float:
        return max(self.end, self.start * self.decay ** episode)


@dataclass
class BaselineConfig:
    kind: str = "jal"
    lr: float = 0.1
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    fmq_weight: float = 10.0
    delta_win: float = 0.05
    delta_lose: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.lr <= 1.0:
            raise ValueError("lr must be in (0, 1]")
        if self.fmq_weight < 0:
            raise ValueError("fmq_weight must be >= 0")
        if not 0.0 < self.delta_win < self.delta_lose:
            raise ValueError("need delta_lose > delta_win > 0")


class _DiscreteBaseline:
    """Shared bookkeeping: episode counting and epsilon-greedy selection."""

    def __init__(self, n_actions: int, n_opp_actions: int, cfg: BaselineConfig,
                 seed: int | np.random.Generator = 0):
        self.n_actions = n_actions
        self.n_opp_actions = n_opp_actions
        self.cfg = cfg
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.episode = 0

    def _epsilon(self) -> float:
        return self.cfg.epsilon.value(self.episode)

    def _eps_greedy_probs(self, values: np.ndarray) -> np.ndarray:
        eps = self._epsilon()
        probs = np.full(self.n_actions, eps / self.n_actions)
        probs[int(np.argmax(values))] += 1.0 - eps
        return probs

    def _pick(self, probs: np.ndarray) -> int:
        return int(self.rng.choice(self.n_actions, p=probs))

    def train_step(self) -> None:
        """Baselines update online in observe()."""

    def _finish_episode(self, t: Transition) -> None:
        if t.done:
            self.episode += 1


class JALLearner(_DiscreteBaseline):
    """Joint-action Q with an empirical opponent frequency best response."""

    def __init__(self, n_actions, n_opp_actions, cfg, seed=0):
        super().__init__(n_actions, n_opp_actions, cfg, seed)
        self.q = np.zeros((n_actions, n_opp_actions))
        self.opp_counts = np.zeros(n_opp_actions)

    def _opp_freq(self) -> np.ndarray:
        total = self.opp_counts.sum()
        if total == 0:
            return np.full(self.n_opp_actions, 1.0 / self.n_opp_actions)
        return self.opp_counts / total

    def _expected_values(self) -> np.ndarray:
        return self.q @ self._opp_freq()

    def policy_probs(self, state: int = 0) -> np.ndarray:
        return self._eps_greedy_probs(self._expected_values())

    def opponent_model_probs(self, state: int = 0) -> np.ndarray:
        return self._opp_freq()

    def act(self, state: int = 0) -> int:
        return self._pick(self.policy_probs(state))

    def observe(self, t: Transition) -> None:
        self.opp_counts[t.opp_action] += 1
        self.q[t.action, t.opp_action] += self.cfg.lr * (t.reward - self.q[t.action, t.opp_action])
        self._finish_episode(t)


class WoLFPHCLearner(_DiscreteBaseline):
    """Policy hill climbing with a win/lose-dependent step against the
    average policy; the policy is re-projected to the simplex every update."""

    def __init__(self, n_actions, n_opp_actions, cfg, seed=0):
        super().__init__(n_actions, n_opp_actions, cfg, seed)
        self.q = np.zeros(n_actions)
        self.pi = np.full(n_actions, 1.0 / n_actions)
        self.pi_avg = np.full(n_actions, 1.0 / n_actions)
        self.visits = 0

    def policy_probs(self, state: int = 0) -> np.ndarray:
        return self.pi.copy()

    def act(self, state: int = 0) -> int:
        return self._pick(self.pi)

    def observe(self, t: Transition) -> None:
        self.q[t.action] += self.cfg.lr * (t.reward - self.q[t.action])
        self.visits += 1
        self.pi_avg += (self.pi - self.pi_avg) / self.visits
        winning = float(self.pi @ self.q) > float(self.pi_avg @ self.q)
        delta = self.cfg.delta_win if winning else self.cfg.delta_lose
        best = int(np.argmax(self.q))
        for a in range(self.n_actions):
            if a == best:
                continue
            move = min(self.pi[a], delta / (self.n_actions - 1))
            self.pi[a] -= move
            self.pi[best] += move
        self.pi = np.clip(self.pi, 0.0, 1.0)
        self.pi /= self.pi.sum()
        self._finish_episode(t)


class FMQLearner(_DiscreteBaseline):
    """Independent Q biased by the frequency of each action's best observed
    reward: EV(a) = Q(a) + c * freq_max(a) * max_r(a)."""

    def __init__(self, n_actions, n_opp_actions, cfg, seed=0):
        super().__init__(n_actions, n_opp_actions, cfg, seed)
        self.q = np.zeros(n_actions)
        self.max_r = np.zeros(n_actions)
        self.max_r_seen = np.zeros(n_actions, dtype=bool)
        self.count_max = np.zeros(n_actions)
        self.count_a = np.zeros(n_actions)

    def _expected_values(self) -> np.ndarray:
        freq = np.divide(self.count_max, self.count_a,
                         out=np.zeros(self.n_actions), where=self.count_a > 0)
        return self.q + self.cfg.fmq_weight * freq * self.max_r

    def policy_probs(self, state: int = 0) -> np.ndarray:
        return self._eps_greedy_probs(self._expected_values())

    def act(self, state: int = 0) -> int:
        return self._pick(self.policy_probs(state))

    def observe(self, t: Transition) -> None:
        a, r = t.action, t.reward
        self.count_a[a] += 1
        if not self.max_r_seen[a] or r > self.max_r[a]:
            self.max_r[a] = r
            self.max_r_seen[a] = True
            self.count_max[a] = 1
        elif r == self.max_r[a]:
            self.count_max[a] += 1
        self.q[a] += self.cfg.lr * (r - self.q[a])
        self._finish_episode(t)


def rommeo_q_emp(cfg: QLearnerConfig, seed: int | np.random.Generator = 0) -> RommeoQLearner:
    """The ablation learner: identical to the main learner except the acting
    opponent model is the raw empirical frequency."""
    emp_cfg = QLearnerConfig(**{**asdict(cfg), "use_empirical_model": True})
    return RommeoQLearner(emp_cfg, seed)
