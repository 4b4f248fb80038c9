"""Actor-critic learner for continuous games: a joint-action critic, a
conditional policy, an opponent model, and a learned prior over opponent
actions, all squashed-Gaussian heads on small dense networks.

Gradients are computed analytically through the reparameterized samples with
frozen noise (the noise is drawn once per update and replayed through the
chain rule), so every loss here is finite-difference checkable. All sampled
actions stay strictly inside the action box via the tanh squash.

Actions are normalized to [-1, 1] wherever they enter a network: magnitudes
of ten into Glorot-initialized tanh layers saturate the first layer and
starve the critic's action gradients.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .nets import (
    HALF_LOG_2PI,
    SQUASH_JACOBIAN_EPS,
    Adam,
    MLP,
    backward,
    clamp_log_std,
    forward,
    forward_cached,
    init_mlp,
    log_prob_from_raw,
    net_from_dict,
    net_to_dict,
    optimizer_step,
    squash,
    squash_jacobian,
    unsquash,
)
from .qlearner import ReplayBuffer


@dataclass
class ContinuousTransition:
    state: np.ndarray
    action: float
    opp_action: float
    opp_model_sample: float
    next_state: np.ndarray
    reward: float
    done: bool


@dataclass
class ACConfig:
    """Defaults are tuned at desk scale for the stateless differential game.

    gamma = 0 because a stateless stage game carries no cross-step credit:
    a positive discount only rescales values and amplifies target variance.
    The opponent model learns faster than the policy on purpose: the model
    has to move toward the high-value region first so the policy can follow.
    """

    state_dim: int = 1
    action_low: float = -10.0
    action_high: float = 10.0
    alpha: float = 0.6
    gamma: float = 0.0
    lr_critic: float = 1e-2
    lr_policy: float = 1e-3
    lr_model: float = 6e-3
    lr_prior: float = 3e-3
    batch_size: int = 64
    polyak: float = 0.05
    target_interval: int = 1
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "relu"
    buffer_capacity: int = 2000
    head_out_scale: float = 0.01
    init_log_std: float = 0.5

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not self.action_low < self.action_high:
            raise ValueError("action_low must be < action_high")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if not 0.0 < self.polyak <= 1.0:
            raise ValueError("polyak blend must be in (0, 1]")
        if self.alpha <= 0 or min(self.lr_critic, self.lr_policy, self.lr_model, self.lr_prior) <= 0:
            raise ValueError("alpha and learning rates must be positive")
        if self.batch_size < 1 or self.target_interval < 1:
            raise ValueError("batch_size and target_interval must be >= 1")


MEAN_RAW_LIMIT = 3.0  # tanh(3) covers 99.5% of the box; keeps densities off the edge spike


def _head(out: np.ndarray):
    """Split a (B, 2) head output into clamped mean, clamped log_std, and the
    log_std clamp mask. The raw-space mean clamp prevents the squash-jacobian
    density correction from exploding when a head runs toward the box edge."""
    mean = np.clip(out[:, 0], -MEAN_RAW_LIMIT, MEAN_RAW_LIMIT)
    log_std, mask = clamp_log_std(out[:, 1])
    return mean, log_std, mask


def _head_grad(out: np.ndarray):
    """Gradient gates for both clamps, aligned with ``_head``."""
    m_mask = (np.abs(out[:, 0]) < MEAN_RAW_LIMIT).astype(np.float64)
    return m_mask


def _norm_action(a, low: float, high: float):
    """Map actions from the box to [-1, 1] for network consumption."""
    return (np.asarray(a, dtype=np.float64) - 0.5 * (low + high)) / (0.5 * (high - low))


def _stack(s, *cols):
    return np.column_stack([np.atleast_2d(s)] + [np.asarray(c, dtype=np.float64).reshape(-1, 1) for c in cols])


# ---------------------------------------------------------------------------
# losses and analytic gradients (noise passed in so tests can freeze it)
# ---------------------------------------------------------------------------

def v_bar_values(q_target: MLP, pi_net: MLP, rho_net: MLP, prior_net: MLP,
                 s_next: np.ndarray, alpha: float, low: float, high: float,
                 eps_opp: np.ndarray, eps_own: np.ndarray) -> np.ndarray:
    """Bootstrap component of the critic target, per batch row:
    Q_target(s', a', a_hat') - log rho(a_hat'|s') - alpha log pi(a'|s', a_hat')
    + log prior(a_hat'|s'), with fresh reparameterized samples a', a_hat'."""
    m_r, l_r, _ = _head(forward(rho_net, s_next))
    raw_r = m_r + np.exp(l_r) * eps_opp
    a_hat = squash(raw_r, low, high)
    a_hat_n = _norm_action(a_hat, low, high)
    log_rho = log_prob_from_raw(m_r, l_r, low, high, raw_r)

    m_p, l_p, _ = _head(forward(pi_net, _stack(s_next, a_hat_n)))
    raw_p = m_p + np.exp(l_p) * eps_own
    a_own = squash(raw_p, low, high)
    log_pi = log_prob_from_raw(m_p, l_p, low, high, raw_p)

    q_bar = forward(q_target, _stack(s_next, _norm_action(a_own, low, high), a_hat_n))[:, 0]

    m_q, l_q, _ = _head(forward(prior_net, s_next))
    log_prior = log_prob_from_raw(m_q, l_q, low, high, raw_r)
    return q_bar - log_rho - alpha * log_pi + log_prior


def critic_loss_grad(q_net: MLP, s, a_i, a_opp, y, low: float, high: float
                     ) -> tuple[float, np.ndarray]:
    """Half squared TD error against fixed targets y, on the real joint action."""
    x = _stack(s, _norm_action(a_i, low, high), _norm_action(a_opp, low, high))
    q, cache = forward_cached(q_net, x)
    err = q[:, 0] - np.asarray(y, dtype=np.float64)
    loss = 0.5 * float(np.mean(err * err))
    dparams, _ = backward(q_net, cache, (err / err.size)[:, None])
    return loss, dparams


def policy_loss_grad(pi_net: MLP, q_net: MLP, s, a_hat, eps, alpha: float,
                     low: float, high: float) -> tuple[float, np.ndarray]:
    """E[alpha log pi(f(eps)) - Q(s, f(eps), a_hat)], gradient through the
    reparameterized own action into the critic's input gradient."""
    s = np.atleast_2d(np.asarray(s, dtype=np.float64))
    batch = s.shape[0]
    a_hat_n = _norm_action(a_hat, low, high)
    out, cache = forward_cached(pi_net, _stack(s, a_hat_n))
    mean, log_std, mask = _head(out)
    m_mask = _head_grad(out)
    sigma = np.exp(log_std)
    raw = mean + sigma * eps
    t = np.tanh(raw)
    hw = (high - low) / 2.0
    squash_d = hw * (1.0 - t * t)
    jac = squash_d + SQUASH_JACOBIAN_EPS
    djac_draw = -2.0 * t * squash_d
    a_own = low + hw * (t + 1.0)

    log_pi = -0.5 * eps * eps - log_std - HALF_LOG_2PI - np.log(jac)
    xq = _stack(s, _norm_action(a_own, low, high), a_hat_n)
    qv, qcache = forward_cached(q_net, xq)
    _, dxq = backward(q_net, qcache, np.ones((batch, 1)))
    dq_da = dxq[:, s.shape[1]] / hw  # input gradient back to true action units

    loss = float(np.mean(alpha * log_pi - qv[:, 0]))
    dlogpi_dm = -djac_draw / jac
    dlogpi_dl = -1.0 - (djac_draw / jac) * sigma * eps
    gm = (alpha * dlogpi_dm - dq_da * squash_d) * m_mask
    gl = (alpha * dlogpi_dl - dq_da * squash_d * sigma * eps) * mask
    dparams, _ = backward(pi_net, cache, np.column_stack([gm, gl]) / batch)
    return loss, dparams


def model_loss_grad(rho_net: MLP, pi_net: MLP, prior_net: MLP, q_net: MLP,
                    s, a_i, eps, alpha: float, low: float, high: float
                    ) -> tuple[float, np.ndarray]:
    """E[log rho(g(eps)) - log prior(g(eps)) - Q(s, a_i, g(eps))
    + alpha log pi(a_i | s, g(eps))] with a_i the recorded own action; the
    gradient flows through the reparameterized opponent sample into the
    critic, the policy network input, and the prior density."""
    s = np.atleast_2d(np.asarray(s, dtype=np.float64))
    batch = s.shape[0]
    a_i = np.asarray(a_i, dtype=np.float64)
    out, cache = forward_cached(rho_net, s)
    m_r, l_r, mask_r = _head(out)
    m_mask_r = _head_grad(out)
    sig_r = np.exp(l_r)
    raw = m_r + sig_r * eps
    t = np.tanh(raw)
    hw = (high - low) / 2.0
    squash_d = hw * (1.0 - t * t)
    jac = squash_d + SQUASH_JACOBIAN_EPS
    djac_draw = -2.0 * t * squash_d
    a_hat = low + hw * (t + 1.0)
    a_hat_n = _norm_action(a_hat, low, high)

    log_rho = -0.5 * eps * eps - l_r - HALF_LOG_2PI - np.log(jac)

    m_q, l_q, _ = _head(forward(prior_net, s))
    z_q = (raw - m_q) * np.exp(-l_q)
    log_prior = -0.5 * z_q * z_q - l_q - HALF_LOG_2PI - np.log(jac)

    xq = _stack(s, _norm_action(a_i, low, high), a_hat_n)
    qv, qcache = forward_cached(q_net, xq)
    _, dxq = backward(q_net, qcache, np.ones((batch, 1)))
    dq_dahat = dxq[:, s.shape[1] + 1] / hw

    pi_out, pi_cache = forward_cached(pi_net, _stack(s, a_hat_n))
    m_pi, l_pi, mask_pi = _head(pi_out)
    raw_i = unsquash(a_i, low, high)
    z_i = (raw_i - m_pi) * np.exp(-l_pi)
    log_pi_ai = -0.5 * z_i * z_i - l_pi - HALF_LOG_2PI - np.log(squash_jacobian(raw_i, low, high))
    head_up = np.column_stack([z_i * np.exp(-l_pi), (z_i * z_i - 1.0) * mask_pi])
    _, dx_pi = backward(pi_net, pi_cache, head_up)
    dlogpi_dahat = dx_pi[:, s.shape[1]] / hw

    loss = float(np.mean(log_rho - log_prior - qv[:, 0] + alpha * log_pi_ai))

    # the -log(jac) terms of log_rho and -log_prior cancel against each other
    dloss_draw = (
        z_q * np.exp(-l_q)
        + (-dq_dahat + alpha * dlogpi_dahat) * squash_d
    )
    gm = dloss_draw * m_mask_r
    gl = (dloss_draw * sig_r * eps - 1.0) * mask_r
    dparams, _ = backward(rho_net, cache, np.column_stack([gm, gl]) / batch)
    return loss, dparams


def prior_loss_grad(prior_net: MLP, s, a_opp, low: float, high: float
                    ) -> tuple[float, np.ndarray]:
    """Maximum likelihood on the recorded real opponent actions."""
    s = np.atleast_2d(np.asarray(s, dtype=np.float64))
    batch = s.shape[0]
    out, cache = forward_cached(prior_net, s)
    m, l, mask = _head(out)
    m_mask = _head_grad(out)
    raw = unsquash(np.asarray(a_opp, dtype=np.float64), low, high)
    z = (raw - m) * np.exp(-l)
    log_p = -0.5 * z * z - l - HALF_LOG_2PI - np.log(squash_jacobian(raw, low, high))
    loss = float(np.mean(-log_p))
    upstream = np.column_stack([-z * np.exp(-l) * m_mask, (1.0 - z * z) * mask]) / batch
    dparams, _ = backward(prior_net, cache, upstream)
    return loss, dparams


# ---------------------------------------------------------------------------
# agent
# ---------------------------------------------------------------------------

class ACAgent:
    """One self-play agent; holds its own networks, buffer, and RNG."""

    def __init__(self, cfg: ACConfig, seed: int | np.random.Generator = 0):
        self.cfg = cfg
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        ds, h, act = cfg.state_dim, cfg.hidden, cfg.activation
        self.q_net = init_mlp((ds + 2, *h, 1), self.rng, act)
        self.q_target = self.q_net.copy()
        self.pi_net = init_mlp((ds + 1, *h, 2), self.rng, act, out_scale=cfg.head_out_scale)
        self.rho_net = init_mlp((ds, *h, 2), self.rng, act, out_scale=cfg.head_out_scale)
        self.prior_net = init_mlp((ds, *h, 2), self.rng, act, out_scale=cfg.head_out_scale)
        for net in (self.pi_net, self.rho_net, self.prior_net):
            net.params[-1] += cfg.init_log_std  # log_std output bias
        self.opt_q = Adam(cfg.lr_critic)
        self.opt_pi = Adam(cfg.lr_policy)
        self.opt_rho = Adam(cfg.lr_model)
        self.opt_prior = Adam(cfg.lr_prior)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.train_steps = 0

    @property
    def bounds(self) -> tuple[float, float]:
        return self.cfg.action_low, self.cfg.action_high

    def _sample_head(self, net: MLP, x, eps: float) -> float:
        m, l, _ = _head(forward(net, np.atleast_2d(x)))
        return float(squash(m[0] + np.exp(l[0]) * eps, *self.bounds))

    def act(self, state) -> tuple[float, float]:
        """Sample an opponent action from the model, then the own action
        conditioned on it. Returns (action, opponent_model_sample)."""
        state = np.asarray(state, dtype=np.float64)
        a_hat = self._sample_head(self.rho_net, state, self.rng.standard_normal())
        pi_in = np.concatenate([state, [float(_norm_action(a_hat, *self.bounds))]])
        a = self._sample_head(self.pi_net, pi_in, self.rng.standard_normal())
        return a, a_hat

    def observe(self, t: ContinuousTransition) -> None:
        self.buffer.append(t)

    def _batch(self, batch: list[ContinuousTransition]) -> dict:
        return {
            "s": np.stack([np.asarray(t.state, dtype=np.float64) for t in batch]),
            "a_i": np.array([t.action for t in batch]),
            "a_opp": np.array([t.opp_action for t in batch]),
            "s2": np.stack([np.asarray(t.next_state, dtype=np.float64) for t in batch]),
            "r": np.array([t.reward for t in batch]),
            "done": np.array([t.done for t in batch], dtype=np.float64),
        }

    def _guarded_step(self, opt, net: MLP, grad: np.ndarray) -> None:
        optimizer_step(opt, net.params, grad)
        if not np.all(np.isfinite(net.params)):
            raise FloatingPointError("parameters left the finite range after an update")

    def update_critic(self, b: dict) -> float:
        low, high = self.bounds
        if self.cfg.gamma > 0.0:
            v_bar = v_bar_values(
                self.q_target, self.pi_net, self.rho_net, self.prior_net, b["s2"],
                self.cfg.alpha, low, high,
                self.rng.standard_normal(len(b["r"])), self.rng.standard_normal(len(b["r"])),
            )
            y = b["r"] + self.cfg.gamma * v_bar * (1.0 - b["done"])
        else:
            y = b["r"]
        loss, grad = critic_loss_grad(self.q_net, b["s"], b["a_i"], b["a_opp"], y, low, high)
        self._guarded_step(self.opt_q, self.q_net, grad)
        return loss

    def update_policy(self, b: dict) -> float:
        low, high = self.bounds
        m_r, l_r, _ = _head(forward(self.rho_net, b["s"]))
        a_hat = squash(m_r + np.exp(l_r) * self.rng.standard_normal(len(m_r)), low, high)
        loss, grad = policy_loss_grad(
            self.pi_net, self.q_net, b["s"], a_hat,
            self.rng.standard_normal(len(m_r)), self.cfg.alpha, low, high,
        )
        self._guarded_step(self.opt_pi, self.pi_net, grad)
        return loss

    def update_opponent_model(self, b: dict) -> float:
        low, high = self.bounds
        loss, grad = model_loss_grad(
            self.rho_net, self.pi_net, self.prior_net, self.q_net, b["s"], b["a_i"],
            self.rng.standard_normal(len(b["a_i"])), self.cfg.alpha, low, high,
        )
        self._guarded_step(self.opt_rho, self.rho_net, grad)
        return loss

    def update_prior(self, b: dict) -> float:
        loss, grad = prior_loss_grad(self.prior_net, b["s"], b["a_opp"], *self.bounds)
        self._guarded_step(self.opt_prior, self.prior_net, grad)
        return loss

    def sync_target(self) -> None:
        beta = self.cfg.polyak
        self.q_target.params *= 1.0 - beta
        self.q_target.params += beta * self.q_net.params

    def train_step(self) -> Optional[dict]:
        """One update of each component, in order: critic, policy, opponent
        model, prior, then a periodic target blend."""
        if len(self.buffer) < self.cfg.batch_size:
            return None
        b = self._batch(self.buffer.sample(self.rng, self.cfg.batch_size))
        losses = {
            "critic": self.update_critic(b),
            "policy": self.update_policy(b),
            "model": self.update_opponent_model(b),
            "prior": self.update_prior(b),
        }
        self.train_steps += 1
        if self.train_steps % self.cfg.target_interval == 0:
            self.sync_target()
        return losses

    def policy_summary(self, state) -> dict:
        """Squashed means of the three heads at a state (for metric traces)."""
        state = np.atleast_2d(np.asarray(state, dtype=np.float64))
        low, high = self.bounds
        m_r, _, _ = _head(forward(self.rho_net, state))
        rho_mean = float(squash(m_r[0], low, high))
        m_p, _, _ = _head(forward(self.pi_net, _stack(state, _norm_action([rho_mean], low, high))))
        m_q, _, _ = _head(forward(self.prior_net, state))
        return {
            "pi_mean": float(squash(m_p[0], low, high)),
            "rho_mean": rho_mean,
            "prior_mean": float(squash(m_q[0], low, high)),
        }

    # -- checkpointing -----------------------------------------------------

    def to_checkpoint(self) -> dict:
        def opt_state(o: Adam) -> dict:
            return {
                "t": o._t,
                "m": o._m.tolist() if o._m is not None else None,
                "v": o._v.tolist() if o._v is not None else None,
            }

        return {
            "config": asdict(self.cfg),
            "nets": {
                "q": net_to_dict(self.q_net),
                "q_target": net_to_dict(self.q_target),
                "pi": net_to_dict(self.pi_net),
                "rho": net_to_dict(self.rho_net),
                "prior": net_to_dict(self.prior_net),
            },
            "opts": {
                "q": opt_state(self.opt_q),
                "pi": opt_state(self.opt_pi),
                "rho": opt_state(self.opt_rho),
                "prior": opt_state(self.opt_prior),
            },
            "train_steps": self.train_steps,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_checkpoint(cls, ckpt: dict) -> "ACAgent":
        cfg_d = dict(ckpt["config"])
        cfg_d["hidden"] = tuple(cfg_d["hidden"])
        agent = cls(ACConfig(**cfg_d))
        agent.q_net = net_from_dict(ckpt["nets"]["q"])
        agent.q_target = net_from_dict(ckpt["nets"]["q_target"])
        agent.pi_net = net_from_dict(ckpt["nets"]["pi"])
        agent.rho_net = net_from_dict(ckpt["nets"]["rho"])
        agent.prior_net = net_from_dict(ckpt["nets"]["prior"])
        for name, opt in (("q", agent.opt_q), ("pi", agent.opt_pi),
                          ("rho", agent.opt_rho), ("prior", agent.opt_prior)):
            st = ckpt["opts"][name]
            opt._t = st["t"]
            opt._m = None if st["m"] is None else np.asarray(st["m"])
            opt._v = None if st["v"] is None else np.asarray(st["v"])
        agent.train_steps = int(ckpt["train_steps"])
        agent.rng.bit_generator.state = ckpt["rng_state"]
        return agent
