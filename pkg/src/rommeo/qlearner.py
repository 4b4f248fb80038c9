"""Sample-based tabular learner: soft acting through the marginal policy,
replay buffer, empirical opponent prior, K-sample soft-value estimation, and
TD updates toward a periodically synchronized target table.

The learner is single-threaded and fully deterministic under a fixed seed;
independent trials parallelize with no shared state.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import soft_tables


@dataclass
class Transition:
    """One experience tuple from a single agent's perspective."""

    state: int
    action: int
    opp_action: int
    next_state: int
    reward: float
    done: bool
    opp_model_sample: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.reward):
            raise ValueError("transition reward must be finite")


class ReplayBuffer:
    """FIFO ring buffer of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._items = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def append(self, item) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, rng: np.random.Generator, n: int) -> list:
        idx = rng.integers(0, len(self._items), size=n)
        return [self._items[i] for i in idx]

    def items(self) -> list:
        return list(self._items)


class EmpiricalPrior:
    """Opponent-action counts per state; uniform fallback for unvisited states.

    Counts are monotone (they track every observation, not just buffer
    residents), so the derived probabilities are always a distribution.
    """

    def __init__(self, n_states: int, n_opp_actions: int):
        self.counts = np.zeros((n_states, n_opp_actions), dtype=np.int64)

    def update(self, state: int, opp_action: int) -> None:
        self.counts[state, opp_action] += 1

    def probs(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True)
        n = self.counts.shape[1]
        with np.errstate(invalid="ignore"):
            p = np.where(totals > 0, self.counts / np.maximum(totals, 1), 1.0 / n)
        return p


def v_bar_estimate(q_target: np.ndarray, pi: np.ndarray, rho: np.ndarray,
                   prior: np.ndarray, state: int, n_samples: int, alpha: float,
                   rng: np.random.Generator) -> float:
    """K-sample importance estimate of the soft state value of the target table.

    Samples opponent actions from rho and own actions from pi, then averages
    P * exp(Q) / (pi * rho) in log space. The alpha exponents of the printed
    weight cancel algebraically: (P^(1/alpha) exp(Q/alpha))^alpha = P exp(Q).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    prior = soft_tables.smooth_prior(prior)
    n_opp = rho.shape[1]
    opp = rng.choice(n_opp, size=n_samples, p=rho[state])
    pi_rows = pi[state, opp, :]                      # (K, n_own)
    u = rng.random(n_samples)
    own = np.minimum(
        (np.cumsum(pi_rows, axis=1) < u[:, None]).sum(axis=1),
        pi_rows.shape[1] - 1,
    )
    log_ratio = (
        np.log(prior[state, opp])
        + q_target[state, own, opp]
        - np.log(pi_rows[np.arange(n_samples), own])
        - np.log(rho[state, opp])
    )
    shift = np.max(log_ratio)
    return float(shift + np.log(np.mean(np.exp(log_ratio - shift))))


@dataclass
class QLearnerConfig:
    n_actions: int
    n_opp_actions: int
    n_states: int = 1
    alpha: float = 1.0
    gamma: float = 0.0
    lr: float = 0.1
    buffer_capacity: int = 1000
    batch_size: int = 32
    v_samples: int = 30
    target_interval: int = 1
    use_empirical_model: bool = False

    def __post_init__(self):
        if not 0.0 < self.lr <= 1.0:
            raise ValueError("lr must be in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if min(self.batch_size, self.v_samples, self.target_interval) < 1:
            raise ValueError("batch_size, v_samples and target_interval must be >= 1")


class RommeoQLearner:
    """Tabular self-play learner with a regularized opponent model.

    ``use_empirical_model=True`` is the ablation variant that substitutes the
    raw empirical opponent frequency for the reweighted model.
    """

    def __init__(self, cfg: QLearnerConfig, seed: int | np.random.Generator = 0):
        self.cfg = cfg
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        shape = (cfg.n_states, cfg.n_actions, cfg.n_opp_actions)
        self.q = np.zeros(shape)
        self.q_target = np.zeros(shape)
        self.prior = EmpiricalPrior(cfg.n_states, cfg.n_opp_actions)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.train_steps = 0

    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Current conditional policy and opponent model from the online table."""
        pi = soft_tables.extract_policy(self.q, self.cfg.alpha)
        prior = self.prior.probs()
        if self.cfg.use_empirical_model:
            rho = soft_tables.smooth_prior(prior)
        else:
            rho = soft_tables.extract_opponent_model(self.q, prior, self.cfg.alpha)
        return pi, rho

    def marginal_policy(self, state: int) -> np.ndarray:
        pi, rho = self.tables()
        return np.einsum("ba,b->a", pi[state], rho[state])

    def act(self, state: int) -> int:
        return int(self.rng.choice(self.cfg.n_actions, p=self.marginal_policy(state)))

    def observe(self, t: Transition) -> None:
        self.buffer.append(t)
        self.prior.update(t.state, t.opp_action)

    def v_bar(self, state: int, n_samples: int | None = None) -> float:
        pi, rho = self.tables()
        return v_bar_estimate(
            self.q_target, pi, rho, self.prior.probs(), state,
            n_samples or self.cfg.v_samples, self.cfg.alpha, self.rng,
        )

    def train_step(self) -> None:
        """One minibatch of TD updates; syncs the target every C steps."""
        if len(self.buffer) < self.cfg.batch_size:
            return
        batch = self.buffer.sample(self.rng, self.cfg.batch_size)
        for t in batch:
            if t.done or self.cfg.gamma == 0.0:
                y = t.reward
            else:
                y = t.reward + self.cfg.gamma * self.v_bar(t.next_state)
            self.q[t.state, t.action, t.opp_action] -= self.cfg.lr * (
                self.q[t.state, t.action, t.opp_action] - y
            )
        self.train_steps += 1
        if self.train_steps % self.cfg.target_interval == 0:
            self.q_target = self.q.copy()

    # -- checkpointing -----------------------------------------------------

    def to_checkpoint(self) -> dict:
        return {
            "config": asdict(self.cfg),
            "q": self.q.tolist(),
            "q_target": self.q_target.tolist(),
            "prior_counts": self.prior.counts.tolist(),
            "train_steps": self.train_steps,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_checkpoint(cls, ckpt: dict) -> "RommeoQLearner":
        learner = cls(QLearnerConfig(**ckpt["config"]))
        learner.q = np.asarray(ckpt["q"], dtype=np.float64)
        learner.q_target = np.asarray(ckpt["q_target"], dtype=np.float64)
        learner.prior.counts = np.asarray(ckpt["prior_counts"], dtype=np.int64)
        learner.train_steps = int(ckpt["train_steps"])
        learner.rng.bit_generator.state = ckpt["rng_state"]
        return learner
