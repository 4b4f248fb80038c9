"""Two-player benchmark games: the climbing matrix game and the
max-of-two-quadratics differential game.

Both are stateless repeated stage games; a single sentinel state id (0) keeps
the interfaces compatible with stateful games. Matrix-game episodes terminate
after one joint action, differential-game episodes after a fixed number of
steps of the same stage game.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

STATE_ID = 0

CLIMBING_LABELS = ("A", "B", "C")
_CLIMBING_BASE = np.array(
    [[11.0, -30.0, 0.0],
     [-30.0, 7.0, 6.0],
     [0.0, 0.0, 5.0]]
)


@dataclass(frozen=True)
class DiscreteSpace:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("discrete action space needs at least 2 actions")

    def contains(self, a) -> bool:
        return isinstance(a, (int, np.integer)) and 0 <= a < self.n


@dataclass(frozen=True)
class BoxSpace:
    low: float
    high: float
    dim: int = 1

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("box requires low < high")
        if self.dim < 1:
            raise ValueError("box requires dim >= 1")

    def contains(self, a) -> bool:
        a = np.asarray(a, dtype=np.float64)
        return bool(np.all(np.isfinite(a)) and np.all(a >= self.low) and np.all(a <= self.high))


@dataclass(frozen=True)
class MatrixGame:
    """Bimatrix stage game; payoffs indexed (agent, a1, a2)."""

    payoffs: np.ndarray
    labels: tuple[str, ...] | None = None
    default_episode_len: int = 1

    def __post_init__(self):
        payoffs = np.asarray(self.payoffs, dtype=np.float64)
        if payoffs.ndim != 3 or payoffs.shape[0] != 2:
            raise ValueError("payoffs must have shape (2, n1, n2)")
        if not np.all(np.isfinite(payoffs)):
            raise ValueError("payoffs must be finite")
        payoffs.setflags(write=False)
        object.__setattr__(self, "payoffs", payoffs)

    @property
    def n_actions(self) -> tuple[int, int]:
        return self.payoffs.shape[1], self.payoffs.shape[2]

    @property
    def shared(self) -> bool:
        return bool(np.array_equal(self.payoffs[0], self.payoffs[1]))

    @property
    def action_spaces(self) -> tuple[DiscreteSpace, DiscreteSpace]:
        return DiscreteSpace(self.n_actions[0]), DiscreteSpace(self.n_actions[1])

    def rewards(self, a1: int, a2: int) -> tuple[float, float]:
        s1, s2 = self.action_spaces
        if not (s1.contains(a1) and s2.contains(a2)):
            raise ValueError(f"invalid joint action ({a1}, {a2})")
        return float(self.payoffs[0, a1, a2]), float(self.payoffs[1, a1, a2])

    def payoff_view(self, agent: int) -> np.ndarray:
        """Reward tensor R(s, a_own, a_opp) from one agent's perspective."""
        if agent == 0:
            return self.payoffs[0][None, :, :].copy()
        if agent == 1:
            return self.payoffs[1].T[None, :, :].copy()
        raise ValueError("agent must be 0 or 1")


def climbing_game(cc_payoffs: tuple[float, float] = (5.0, 5.0)) -> MatrixGame:
    """The 3x3 cooperative climbing game.

    Global optimum (A, A) = 11, a second equilibrium at (B, B) = 7, and
    severe miscoordination penalties around A. The (C, C) cell defaults to a
    shared 5; pass ``cc_payoffs=(5.0, 3.0)`` for the asymmetric variant.
    """
    p = np.stack([_CLIMBING_BASE.copy(), _CLIMBING_BASE.copy()])
    p[0, 2, 2] = cc_payoffs[0]
    p[1, 2, 2] = cc_payoffs[1]
    return MatrixGame(p, labels=CLIMBING_LABELS)


def max_two_quadratics_reward(a1: float, a2: float) -> float:
    """Shared reward max(f1, f2): local maximum 0 at (-5, -5), global 10 at (5, 5)."""
    if not (-10.0 <= a1 <= 10.0 and -10.0 <= a2 <= 10.0):
        raise ValueError(f"action ({a1}, {a2}) outside [-10, 10]^2")
    f1 = 0.8 * (-(((a1 + 5.0) / 3.0) ** 2) - ((a2 + 5.0) / 3.0) ** 2)
    f2 = 1.0 * (-((a1 - 5.0) ** 2) - (a2 - 5.0) ** 2) + 10.0
    return max(f1, f2)


@dataclass(frozen=True)
class DifferentialGame:
    """Continuous stage game with a shared deterministic reward."""

    reward_fn: Callable[[float, float], float]
    space: BoxSpace = field(default_factory=lambda: BoxSpace(-10.0, 10.0, 1))
    default_episode_len: int = 25

    @property
    def action_spaces(self) -> tuple[BoxSpace, BoxSpace]:
        return self.space, self.space

    def rewards(self, a1: float, a2: float) -> tuple[float, float]:
        if not (self.space.contains(a1) and self.space.contains(a2)):
            raise ValueError(f"invalid joint action ({a1}, {a2})")
        r = float(self.reward_fn(float(a1), float(a2)))
        return r, r


def max_two_quadratics_game() -> DifferentialGame:
    return DifferentialGame(reward_fn=max_two_quadratics_reward)


class RepeatedGameEnv:
    """Episode wrapper around a stateless stage game.

    The state is always ``STATE_ID``; ``done`` fires after ``episode_len``
    steps (1 for matrix games, 25 for the differential game by default).
    """

    def __init__(self, game, episode_len: int | None = None):
        self.game = game
        self.episode_len = int(episode_len if episode_len is not None else game.default_episode_len)
        if self.episode_len < 1:
            raise ValueError("episode_len must be >= 1")
        self._t = 0
        self._done = True

    def reset(self) -> int:
        self._t = 0
        self._done = False
        return STATE_ID

    def step(self, joint_action) -> tuple[int, tuple[float, float], bool]:
        if self._done:
            raise RuntimeError("episode finished; call reset()")
        a1, a2 = joint_action
        rewards = self.game.rewards(a1, a2)
        self._t += 1
        self._done = self._t >= self.episode_len
        return STATE_ID, rewards, self._done
