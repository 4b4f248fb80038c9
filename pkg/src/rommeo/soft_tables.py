"""Exact tabular soft-value machinery for two-agent games.

Joint Q tables are indexed ``(state, own_action, opp_action)``; conditional
policy tables ``(state, opp_action, own_action)`` with rows normalized over
own actions; opponent models and priors ``(state, opp_action)``.

Everything that multiplies probabilities with exponentials runs in log space
with max-shifting: the climbing game alone spans exp(-30)..exp(11). Priors
are epsilon-smoothed before use so log-prior and KL terms stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .games import MatrixGame

PRIOR_SMOOTHING = 1e-6


class ContractViolation(ValueError):
    """An input broke a documented precondition (e.g. unnormalized prior)."""


class ConvergenceError(RuntimeError):
    """Iteration hit max_iter before reaching tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class SoftConfig:
    """Entropy weight, discount, solver tolerances, and bootstrap mode.

    ``bootstrap="terminal"`` treats every step as episode-ending (the
    single-step matrix-game reading, no bootstrapping); ``"repeated"`` lets
    each state bootstrap its own soft value, the infinitely-repeated reading.
    """

    alpha: float = 1.0
    gamma: float = 0.0
    tol: float = 1e-10
    max_iter: int = 100_000
    bootstrap: str = "repeated"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")
        if self.bootstrap not in ("terminal", "repeated"):
            raise ValueError(f"unknown bootstrap mode {self.bootstrap!r}")


@dataclass
class SoftSolution:
    """Converged bundle from the fixed-point solver."""

    q_star: np.ndarray
    v_star: np.ndarray
    pi_star: np.ndarray
    rho_star: np.ndarray
    iterations: int
    residual: float

    def joint_probs(self) -> np.ndarray:
        return joint_action_probs(self.pi_star, self.rho_star)

    def joint_argmax(self, state: int = 0) -> tuple[int, int]:
        p = self.joint_probs()[state]
        own, opp = np.unravel_index(int(np.argmax(p)), p.shape)
        return int(own), int(opp)

    def to_dict(self) -> dict:
        return {
            "q_star": self.q_star.tolist(),
            "v_star": self.v_star.tolist(),
            "pi_star": self.pi_star.tolist(),
            "rho_star": self.rho_star.tolist(),
            "iterations": self.iterations,
            "residual": self.residual,
        }


GameOrRewards = Union[MatrixGame, np.ndarray]


def reward_tensor(game: GameOrRewards, agent: int = 0) -> np.ndarray:
    """Normalize a game or a raw (S, n_own, n_opp) array to a reward tensor."""
    if isinstance(game, MatrixGame):
        return game.payoff_view(agent)
    r = np.asarray(game, dtype=np.float64)
    if r.ndim != 3:
        raise ValueError("reward tensor must have shape (n_states, n_own, n_opp)")
    return r


def uniform_prior(n_states: int, n_opp: int) -> np.ndarray:
    return np.full((n_states, n_opp), 1.0 / n_opp)


def smooth_prior(prior: np.ndarray, eps: float = PRIOR_SMOOTHING) -> np.ndarray:
    """Add eps mass everywhere and renormalize; keeps log-prior finite."""
    prior = _check_prior(prior)
    smoothed = prior + eps
    return smoothed / smoothed.sum(axis=1, keepdims=True)


def _check_prior(prior: np.ndarray) -> np.ndarray:
    prior = np.asarray(prior, dtype=np.float64)
    if prior.ndim != 2:
        raise ContractViolation("prior must have shape (n_states, n_opp)")
    if np.any(prior < 0) or not np.allclose(prior.sum(axis=1), 1.0, atol=1e-8):
        raise ContractViolation("prior rows must be distributions")
    return prior


def _check_normalized(table: np.ndarray, axis: int, name: str) -> np.ndarray:
    table = np.asarray(table, dtype=np.float64)
    if np.any(table < -1e-12) or not np.allclose(table.sum(axis=axis), 1.0, atol=1e-8):
        raise ContractViolation(f"{name} rows must be distributions")
    return table


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    shift = np.max(x, axis=axis, keepdims=True)
    return np.squeeze(shift, axis=axis) + np.log(
        np.sum(np.exp(x - shift), axis=axis)
    )


def soft_value(q: np.ndarray, prior: np.ndarray, alpha: float) -> np.ndarray:
    """V(s) = log sum_opp P(opp|s) (sum_own exp(Q/alpha))^alpha, max-shifted."""
    q = np.asarray(q, dtype=np.float64)
    prior = smooth_prior(prior)
    inner = alpha * _logsumexp(q / alpha, axis=1)  # (S, n_opp)
    return _logsumexp(np.log(prior) + inner, axis=1)


def extract_policy(q: np.ndarray, alpha: float) -> np.ndarray:
    """Conditional policy: softmax of Q/alpha over own actions."""
    q = np.asarray(q, dtype=np.float64)
    logits = q / alpha
    logits = logits - np.max(logits, axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return np.transpose(p, (0, 2, 1))  # (S, n_opp, n_own)


def extract_opponent_model(q: np.ndarray, prior: np.ndarray, alpha: float) -> np.ndarray:
    """Prior reweighted by the exponentiated soft advantage of each opponent action."""
    q = np.asarray(q, dtype=np.float64)
    prior = smooth_prior(prior)
    log_rho = np.log(prior) + alpha * _logsumexp(q / alpha, axis=1)
    log_rho -= _logsumexp(log_rho, axis=1)[:, None]
    rho = np.exp(log_rho)
    rho /= rho.sum(axis=1, keepdims=True)
    return rho


def bellman_operator(q: np.ndarray, game: GameOrRewards, prior: np.ndarray,
                     cfg: SoftConfig) -> np.ndarray:
    """One application of the soft backup: R plus the discounted soft value.

    In ``repeated`` mode each state bootstraps from itself (the stage game
    repeats); in ``terminal`` mode the bootstrap term is zero.
    """
    r = reward_tensor(game)
    tq = r.copy()
    if cfg.bootstrap == "repeated" and cfg.gamma > 0.0:
        v = soft_value(q, prior, cfg.alpha)
        tq += cfg.gamma * v[:, None, None]
    return tq


def solve_fixed_point(game: GameOrRewards, prior: np.ndarray,
                      cfg: SoftConfig) -> SoftSolution:
    """Iterate the soft backup from Q = 0 to its unique fixed point.

    Counts only iterations that moved the table; the returned residual is the
    sup-norm fixed-point defect, guaranteed <= cfg.tol on success.
    """
    r = reward_tensor(game)
    q = np.zeros_like(r)
    iterations = 0
    for _ in range(cfg.max_iter):
        q_next = bellman_operator(q, r, prior, cfg)
        residual = float(np.max(np.abs(q_next - q)))
        if residual <= cfg.tol:
            q = q_next
            break
        q = q_next
        iterations += 1
    else:
        raise ConvergenceError("fixed-point iteration did not converge", residual, iterations)
    return SoftSolution(
        q_star=q,
        v_star=soft_value(q, prior, cfg.alpha),
        pi_star=extract_policy(q, cfg.alpha),
        rho_star=extract_opponent_model(q, prior, cfg.alpha),
        iterations=iterations,
        residual=residual,
    )


def _policy_entropy(pi: np.ndarray) -> np.ndarray:
    """Row entropies of a conditional policy table, (S, n_opp)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(pi > 0.0, pi * np.log(pi), 0.0)
    return -plogp.sum(axis=2)


def _kl_to_prior(rho: np.ndarray, prior: np.ndarray) -> np.ndarray:
    """KL(rho || smoothed prior) per state."""
    prior = smooth_prior(prior)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rho > 0.0, rho * (np.log(np.maximum(rho, 1e-300)) - np.log(prior)), 0.0)
    return terms.sum(axis=1)


def evaluate_policy_pair(game: GameOrRewards, pi: np.ndarray, rho: np.ndarray,
                         prior: np.ndarray, cfg: SoftConfig) -> np.ndarray:
    """Iterative evaluation of Q for a fixed (policy, opponent model) pair.

    Backup per state: expected next Q under (rho, pi) plus alpha-weighted
    policy entropy minus KL(rho || prior), discounted. Exact R for gamma = 0
    or terminal mode.
    """
    r = reward_tensor(game)
    pi = _check_normalized(pi, 2, "policy")
    rho = _check_normalized(rho, 1, "opponent model")
    if cfg.bootstrap == "terminal" or cfg.gamma == 0.0:
        return r.copy()
    ent = _policy_entropy(pi)          # (S, n_opp)
    kl = _kl_to_prior(rho, prior)      # (S,)
    q = np.zeros_like(r)
    for k in range(cfg.max_iter):
        eq = np.einsum("sba,sab->sb", pi, q)
        g = np.einsum("sb,sb->s", rho, cfg.alpha * ent + eq) - kl
        q_next = r + cfg.gamma * g[:, None, None]
        residual = float(np.max(np.abs(q_next - q)))
        q = q_next
        if residual <= cfg.tol:
            return q
    raise ConvergenceError("policy evaluation did not converge", residual, k + 1)


def policy_improvement_step(q: np.ndarray, alpha: float) -> np.ndarray:
    """Improved conditional policy, proportional to exp(Q/alpha)."""
    return extract_policy(q, alpha)


def opponent_improvement_step(q: np.ndarray, pi: np.ndarray, prior: np.ndarray,
                              alpha: float) -> np.ndarray:
    """Improved opponent model: softmax over opponent actions of the
    policy-averaged Q plus alpha-weighted policy entropy plus log prior."""
    q = np.asarray(q, dtype=np.float64)
    pi = _check_normalized(pi, 2, "policy")
    prior = smooth_prior(prior)
    score = np.einsum("sba,sab->sb", pi, q) + alpha * _policy_entropy(pi) + np.log(prior)
    score -= np.max(score, axis=1, keepdims=True)
    rho = np.exp(score)
    rho /= rho.sum(axis=1, keepdims=True)
    return rho


def rommeo_objective(game: GameOrRewards, pi: np.ndarray, rho: np.ndarray,
                     prior: np.ndarray, alpha: float = 1.0) -> float:
    """Single-step objective by exact enumeration:
    E[R] + alpha E[H(pi)] - KL(rho || prior). Requires a stateless game."""
    r = reward_tensor(game)
    if r.shape[0] != 1:
        raise ContractViolation("objective enumeration requires a single-state game")
    pi = _check_normalized(pi, 2, "policy")
    rho = _check_normalized(rho, 1, "opponent model")
    exp_r = np.einsum("sba,sab->sb", pi, r)
    per_opp = exp_r + alpha * _policy_entropy(pi)
    j = np.einsum("sb,sb->s", rho, per_opp) - _kl_to_prior(rho, prior)
    return float(j[0])


def joint_action_probs(pi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Joint distribution pi(a|s,b) * rho(b|s), indexed (state, own, opp)."""
    return np.einsum("sba,sb->sab", pi, rho)
