"""Experiment orchestration: seeded multi-trial runs with CSV/JSON artifacts,
the property-check suites, the exact-solver frontend, and plot emission.

A run is reproducible from its config and base seed alone: trial k uses seed
``base_seed + k``, trials are independent, and aggregation is sorted by trial
index so the artifacts are invariant to the parallelism degree. Timestamps
live only in the summary's metadata field.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, asdict
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import ac, baselines, games, nets, qlearner, soft_tables

DISCRETE_KINDS = ("rommeo_q", "rommeo_q_emp", "jal", "wolf_phc", "fmq")
CONTINUOUS_KINDS = ("rommeo_ac",)
GAMES = ("climbing", "max_two_quadratics")

OPTIMAL_ACTION = 0          # the "A" index in the climbing game
JOINT_OPT_THRESHOLD = 0.9   # end-of-run joint probability counted as converged
CONTINUOUS_REWARD_THRESHOLD = 9.0


class ConfigError(ValueError):
    """Invalid experiment config; the message carries the offending key."""


@dataclass
class ExperimentConfig:
    game: str = "climbing"
    learners: tuple[str, str] = ("rommeo_q", "rommeo_q")
    episodes: int = 100
    steps_per_episode: int | None = None
    trials: int = 100
    seed: int = 0
    out_dir: str = "results"
    workers: int = 1
    learner_params: dict = field(default_factory=dict)
    plots: bool = False

    def __post_init__(self):
        if isinstance(self.learners, str):
            self.learners = (self.learners, self.learners)
        self.learners = tuple(self.learners)
        if self.game not in GAMES:
            raise ConfigError(f"config.game: unknown game {self.game!r}; expected one of {GAMES}")
        if len(self.learners) != 2:
            raise ConfigError("config.learners: expected one kind or a pair of kinds")
        valid = DISCRETE_KINDS if self.game == "climbing" else CONTINUOUS_KINDS
        for i, kind in enumerate(self.learners):
            if kind not in valid:
                raise ConfigError(
                    f"config.learners[{i}]: {kind!r} cannot play {self.game!r}; expected one of {valid}"
                )
        for key in ("episodes", "trials"):
            if not isinstance(getattr(self, key), int) or getattr(self, key) < 1:
                raise ConfigError(f"config.{key}: expected a positive integer, got {getattr(self, key)!r}")
        if self.steps_per_episode is not None and self.steps_per_episode < 1:
            raise ConfigError("config.steps_per_episode: expected a positive integer")
        if not isinstance(self.seed, int):
            raise ConfigError(f"config.seed: expected an integer, got {self.seed!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"config.workers: expected a positive integer, got {self.workers!r}")
        if not isinstance(self.learner_params, dict):
            raise ConfigError("config.learner_params: expected an object")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object")
        known = set(cls.__dataclass_fields__)
        for key in raw:
            if key not in known:
                raise ConfigError(f"config.{key}: unknown key")
        return cls(**raw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["learners"] = list(self.learners)
        return d


@dataclass
class TrialResult:
    """Per-episode metric series plus final checkpoints for one trial."""

    trial: int
    columns: dict
    final: dict
    checkpoints: list = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])


# ---------------------------------------------------------------------------
# learner construction
# ---------------------------------------------------------------------------

_QLEARNER_KEYS = ("alpha", "gamma", "lr", "buffer_capacity", "batch_size",
                  "v_samples", "target_interval")
_BASELINE_KEYS = ("lr", "fmq_weight", "delta_win", "delta_lose")


def make_discrete_learner(kind: str, n_actions: int, n_opp: int, params: dict,
                          rng: np.random.Generator):
    if kind in ("rommeo_q", "rommeo_q_emp"):
        kwargs = {k: v for k, v in params.items() if k in _QLEARNER_KEYS}
        cfg = qlearner.QLearnerConfig(n_actions=n_actions, n_opp_actions=n_opp, **kwargs)
        if kind == "rommeo_q_emp":
            return baselines.rommeo_q_emp(cfg, rng)
        return qlearner.RommeoQLearner(cfg, rng)
    kwargs = {k: v for k, v in params.items() if k in _BASELINE_KEYS}
    if "epsilon" in params:
        kwargs["epsilon"] = baselines.EpsilonSchedule(**params["epsilon"])
    cfg = baselines.BaselineConfig(kind=kind, **kwargs)
    cls = {"jal": baselines.JALLearner, "wolf_phc": baselines.WoLFPHCLearner,
           "fmq": baselines.FMQLearner}[kind]
    return cls(n_actions, n_opp, cfg, rng)


def make_ac_agent(params: dict, rng: np.random.Generator) -> ac.ACAgent:
    keys = set(ac.ACConfig.__dataclass_fields__) - {"state_dim"}
    kwargs = {k: v for k, v in params.items() if k in keys}
    return ac.ACAgent(ac.ACConfig(state_dim=1, **kwargs), rng)


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

def _trial_rngs(cfg: ExperimentConfig, trial: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(cfg.seed + trial).spawn(2)
    return [np.random.default_rng(c) for c in children]


def _pi_prob(learner, state: int, action: int = OPTIMAL_ACTION) -> float:
    if isinstance(learner, qlearner.RommeoQLearner):
        return float(learner.marginal_policy(state)[action])
    return float(learner.policy_probs(state)[action])


def _rho_prob(learner, state: int, fallback: float, action: int = OPTIMAL_ACTION) -> float:
    if isinstance(learner, qlearner.RommeoQLearner):
        return float(learner.tables()[1][state, action])
    if hasattr(learner, "opponent_model_probs"):
        return float(learner.opponent_model_probs(state)[action])
    return fallback


def run_discrete_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    game = games.climbing_game()
    env = games.RepeatedGameEnv(game, cfg.steps_per_episode or 1)
    n1, n2 = game.n_actions
    rngs = _trial_rngs(cfg, trial)
    learners = [
        make_discrete_learner(cfg.learners[0], n1, n2, cfg.learner_params, rngs[0]),
        make_discrete_learner(cfg.learners[1], n2, n1, cfg.learner_params, rngs[1]),
    ]
    opp_counts = [np.zeros(n2), np.zeros(n1)]  # what each agent has seen its opponent play
    cols = {name: [] for name in (
        "reward", "a0_action", "a1_action",
        "a0_pi_a", "a0_rho_a", "a0_prior_a",
        "a1_pi_a", "a1_rho_a", "a1_prior_a",
        "joint_opt_prob",
    )}
    for _ in range(cfg.episodes):
        s = env.reset()
        done = False
        rewards = []
        a0 = a1 = 0
        while not done:
            a0 = learners[0].act(s)
            a1 = learners[1].act(s)
            s2, (r0, r1), done = env.step((a0, a1))
            learners[0].observe(qlearner.Transition(s, a0, a1, s2, r0, done))
            learners[1].observe(qlearner.Transition(s, a1, a0, s2, r1, done))
            learners[0].train_step()
            learners[1].train_step()
            opp_counts[0][a1] += 1
            opp_counts[1][a0] += 1
            rewards.append(0.5 * (r0 + r1))
            s = s2
        freq = [c[OPTIMAL_ACTION] / max(c.sum(), 1.0) for c in opp_counts]
        pi0, pi1 = _pi_prob(learners[0], s), _pi_prob(learners[1], s)
        cols["reward"].append(float(np.mean(rewards)))
        cols["a0_action"].append(a0)
        cols["a1_action"].append(a1)
        cols["a0_pi_a"].append(pi0)
        cols["a1_pi_a"].append(pi1)
        cols["a0_rho_a"].append(_rho_prob(learners[0], s, freq[0]))
        cols["a1_rho_a"].append(_rho_prob(learners[1], s, freq[1]))
        cols["a0_prior_a"].append(freq[0])
        cols["a1_prior_a"].append(freq[1])
        cols["joint_opt_prob"].append(pi0 * pi1)

    tail = min(10, cfg.episodes)
    final = {
        "final_reward_mean_10": float(np.mean(cols["reward"][-tail:])),
        "final_joint_opt_prob": cols["joint_opt_prob"][-1],
        "converged": cols["joint_opt_prob"][-1] >= JOINT_OPT_THRESHOLD,
    }
    checkpoints = [lrn.to_checkpoint() for lrn in learners if hasattr(lrn, "to_checkpoint")]
    return TrialResult(trial, cols, final, checkpoints)


def run_continuous_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    game = games.max_two_quadratics_game()
    env = games.RepeatedGameEnv(game, cfg.steps_per_episode or game.default_episode_len)
    rngs = _trial_rngs(cfg, trial)
    agents = [make_ac_agent(cfg.learner_params, rngs[i]) for i in range(2)]
    feat = np.array([1.0])  # constant state feature for the stateless stage game
    cols = {name: [] for name in (
        "reward", "a0_action_mean", "a1_action_mean",
        "a0_pi_mean", "a0_rho_mean", "a0_prior_mean",
        "a1_pi_mean", "a1_rho_mean", "a1_prior_mean",
    )}
    for _ in range(cfg.episodes):
        env.reset()
        done = False
        rewards, acts0, acts1 = [], [], []
        while not done:
            a0, h0 = agents[0].act(feat)
            a1, h1 = agents[1].act(feat)
            _, (r0, r1), done = env.step((a0, a1))
            agents[0].observe(ac.ContinuousTransition(feat, a0, a1, h0, feat, r0, done))
            agents[1].observe(ac.ContinuousTransition(feat, a1, a0, h1, feat, r1, done))
            agents[0].train_step()
            agents[1].train_step()
            rewards.append(r0)
            acts0.append(a0)
            acts1.append(a1)
        s0, s1 = agents[0].policy_summary(feat), agents[1].policy_summary(feat)
        cols["reward"].append(float(np.mean(rewards)))
        cols["a0_action_mean"].append(float(np.mean(acts0)))
        cols["a1_action_mean"].append(float(np.mean(acts1)))
        for key, summ in (("a0", s0), ("a1", s1)):
            cols[f"{key}_pi_mean"].append(summ["pi_mean"])
            cols[f"{key}_rho_mean"].append(summ["rho_mean"])
            cols[f"{key}_prior_mean"].append(summ["prior_mean"])

    final = {
        "final_reward_mean": cols["reward"][-1],
        "converged": cols["reward"][-1] >= CONTINUOUS_REWARD_THRESHOLD,
    }
    checkpoints = [a.to_checkpoint() for a in agents]
    return TrialResult(trial, cols, final, checkpoints)


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    if cfg.game == "climbing":
        return run_discrete_trial(cfg, trial)
    return run_continuous_trial(cfg, trial)


def _run_trial_star(args):
    """Pool-safe wrapper: a broken trial is data, not a crash."""
    cfg_dict, trial = args
    try:
        return trial, run_trial(ExperimentConfig(**cfg_dict), trial), None
    except Exception as e:
        return trial, None, f"{type(e).__name__}: {e}"


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

def _write_trial_csv(path: Path, result: TrialResult) -> None:
    names = list(result.columns)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode"] + names)
        n = len(result.columns[names[0]])
        for i in range(n):
            row = [i] + [_fmt(result.columns[name][i]) for name in names]
            writer.writerow(row)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run all trials, write trial_<k>.csv + summary.json (+ optional SVGs).

    Failed trials are recorded in the summary and do not abort the run.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg.to_dict(), k) for k in range(cfg.trials)]
    results: list[TrialResult | None] = [None] * cfg.trials
    failures: dict[int, str] = {}
    if cfg.workers > 1:
        with get_context("spawn").Pool(cfg.workers) as pool:
            outcomes = pool.imap_unordered(_run_trial_star, jobs)
            for trial, res, error in outcomes:
                results[trial] = res
                if error is not None:
                    failures[trial] = error
    else:
        for job in jobs:
            trial, res, error = _run_trial_star(job)
            results[trial] = res
            if error is not None:
                failures[trial] = error

    completed = [r for r in results if r is not None]
    for res in completed:
        _write_trial_csv(out / f"trial_{res.trial}.csv", res)

    summary = {
        "config": cfg.to_dict(),
        "library_version": _package_version(),
        "metadata": {"created_unix": time.time()},
        "failed_trials": failures,
        "trials": [dict(trial=r.trial, **r.final) for r in completed],
        "aggregate": _aggregate(cfg, completed),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    if cfg.plots:
        plot_results(out)
    return out


def _package_version() -> str:
    from . import __version__

    return __version__


def _aggregate(cfg: ExperimentConfig, results: list[TrialResult]) -> dict:
    if not results:
        return {"completed_trials": 0}
    agg = {
        "completed_trials": len(results),
        "convergence_rate": float(np.mean([r.final["converged"] for r in results])),
    }
    if cfg.game == "climbing":
        agg["mean_final_reward_10"] = float(np.mean([r.final["final_reward_mean_10"] for r in results]))
    else:
        agg["mean_final_reward"] = float(np.mean([r.final["final_reward_mean"] for r in results]))
    return agg


# ---------------------------------------------------------------------------
# exact-solver frontend
# ---------------------------------------------------------------------------

def solve_game(game_id: str = "climbing", alpha: float = 1.0, gamma: float = 0.0,
               tol: float = 1e-10) -> dict:
    """Run the exact fixed-point solver on a discrete game and report the
    solution plus the joint argmax under pi* x rho*."""
    if game_id != "climbing":
        raise ConfigError(f"solve: unknown or non-discrete game {game_id!r}")
    game = games.climbing_game()
    cfg = soft_tables.SoftConfig(alpha=alpha, gamma=gamma, tol=tol, bootstrap="repeated")
    prior = soft_tables.uniform_prior(1, game.n_actions[1])
    sol = soft_tables.solve_fixed_point(game.payoff_view(0), prior, cfg)
    own, opp = sol.joint_argmax()
    labels = game.labels or tuple(str(i) for i in range(game.n_actions[0]))
    return {
        "game": game_id,
        "alpha": alpha,
        "gamma": gamma,
        "solution": sol.to_dict(),
        "joint_argmax": [labels[own], labels[opp]],
    }


# ---------------------------------------------------------------------------
# property-check suites
# ---------------------------------------------------------------------------

def check_contraction(n_pairs: int = 1000, seed: int = 0) -> dict:
    """Soft backup is a gamma-contraction in the sup norm (alpha = 1):
    random table pairs on random games, both discount factors."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    example = None
    for i in range(n_pairs):
        n_own = int(rng.integers(2, 5))
        n_opp = int(rng.integers(2, 5))
        r = rng.normal(size=(1, n_own, n_opp)) * rng.uniform(0.5, 10.0)
        prior = rng.dirichlet(np.ones(n_opp))[None, :]
        gamma = 0.5 if i % 2 == 0 else 0.9
        cfg = soft_tables.SoftConfig(alpha=1.0, gamma=gamma, bootstrap="repeated")
        q1 = rng.normal(size=r.shape) * 10.0
        q2 = rng.normal(size=r.shape) * 10.0
        lhs = np.max(np.abs(
            soft_tables.bellman_operator(q1, r, prior, cfg)
            - soft_tables.bellman_operator(q2, r, prior, cfg)
        ))
        rhs = gamma * np.max(np.abs(q1 - q2))
        margin = float(lhs - rhs)
        if margin > worst:
            worst = margin
            example = {"case": i, "gamma": gamma, "lhs": float(lhs), "rhs": float(rhs)}
    return _report("contraction", n_pairs, worst, 1e-9, example)


def check_monotone(n_games: int = 100, rounds: int = 10, seed: int = 0,
                   gamma: float = 0.9) -> dict:
    """Alternating policy / opponent-model improvement from a uniform start
    never decreases the expected evaluated Q (random shared-reward games)."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    example = None
    cfg = soft_tables.SoftConfig(alpha=1.0, gamma=gamma, bootstrap="repeated")
    for g in range(n_games):
        n_own = int(rng.integers(2, 4))
        n_opp = int(rng.integers(2, 4))
        r = rng.normal(size=(1, n_own, n_opp)) * rng.uniform(0.5, 5.0)
        prior = soft_tables.uniform_prior(1, n_opp)
        pi = np.full((1, n_opp, n_own), 1.0 / n_own)
        rho = np.full((1, n_opp), 1.0 / n_opp)
        q = soft_tables.evaluate_policy_pair(r, pi, rho, prior, cfg)
        value = float(np.einsum("sb,sba,sab->", rho, pi, q))
        for _ in range(rounds):
            pi = soft_tables.policy_improvement_step(q, cfg.alpha)
            q = soft_tables.evaluate_policy_pair(r, pi, rho, prior, cfg)
            rho = soft_tables.opponent_improvement_step(q, pi, prior, cfg.alpha)
            q = soft_tables.evaluate_policy_pair(r, pi, rho, prior, cfg)
            new_value = float(np.einsum("sb,sba,sab->", rho, pi, q))
            drop = value - new_value
            if drop > worst:
                worst = drop
                example = {"game": g, "value_before": value, "value_after": new_value}
            value = new_value
    return _report("monotone-improvement", n_games, worst, 1e-9, example)


def check_gradients(n_cases: int = 100, seed: int = 0) -> dict:
    """Analytic gradients vs central finite differences: raw networks,
    squashed-Gaussian log-density, and the four actor-critic losses."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    example = None
    low, high = -10.0, 10.0

    def track(name, case, err):
        nonlocal worst, example
        if err > worst:
            worst = err
            example = {"check": name, "case": case, "rel_err": err}

    for case in range(n_cases):
        widths = (int(rng.integers(1, 4)), int(rng.integers(2, 8)), int(rng.integers(1, 3)))
        net = nets.init_mlp(widths, rng, "tanh" if case % 2 == 0 else "relu")
        x = rng.normal(size=widths[0])
        up = rng.normal(size=widths[-1])

        out, cache = nets.forward_cached(net, x)
        dparams, dx = nets.backward(net, cache, up)

        def loss_params(p, net=net, x=x, up=up):
            return float(nets.forward(nets.MLP(net.widths, net.activation, p), x) @ up)

        def loss_input(xv, net=net, up=up):
            return float(nets.forward(net, xv) @ up)

        track("mlp/params", case, nets.max_relative_error(dparams, nets.finite_difference(loss_params, net.params)))
        track("mlp/input", case, nets.max_relative_error(dx, nets.finite_difference(loss_input, x)))

    for case in range(n_cases):
        mean = float(rng.normal())
        log_std = float(rng.uniform(-2.0, 1.0))
        eps = float(rng.normal())

        def lp(v):
            a, logp = nets.sample_squashed(v[0], v[1], low, high, eps)
            return float(logp)

        v0 = np.array([mean, log_std])
        a, _ = nets.sample_squashed(mean, log_std, low, high, eps)
        t = np.tanh(mean + np.exp(log_std) * eps)
        hw = (high - low) / 2.0
        jac = hw * (1.0 - t * t) + nets.SQUASH_JACOBIAN_EPS
        djac = -2.0 * t * hw * (1.0 - t * t)
        analytic = np.array([-djac / jac, -1.0 - (djac / jac) * np.exp(log_std) * eps])
        track("squash/logprob", case, nets.max_relative_error(analytic, nets.finite_difference(lp, v0)))

    loss_specs = _ac_loss_specs(low, high)
    for name, build in loss_specs.items():
        for case in range(max(1, n_cases // 4)):
            loss_fn, grad, params = build(np.random.default_rng(seed * 7919 + case))
            fd = nets.finite_difference(loss_fn, params)
            track(name, case, nets.max_relative_error(grad, fd))

    return _report("gradients", n_cases, worst, 1e-4, example)


def _ac_loss_specs(low: float, high: float) -> dict:
    """FD-checkable builders for the four actor-critic losses at frozen noise."""
    def nets_for(rng):
        q = nets.init_mlp((3, 8, 1), rng)
        pi = nets.init_mlp((2, 8, 2), rng)
        rho = nets.init_mlp((1, 8, 2), rng)
        prior = nets.init_mlp((1, 8, 2), rng)
        batch = 5
        s = rng.normal(size=(batch, 1))
        data = {
            "s": s,
            "a_i": rng.uniform(-8, 8, size=batch),
            "a_opp": rng.uniform(-8, 8, size=batch),
            "a_hat": rng.uniform(-8, 8, size=batch),
            "eps": rng.normal(size=batch),
            "y": rng.normal(size=batch) * 3.0,
        }
        return q, pi, rho, prior, data

    def critic(rng):
        q, _, _, _, d = nets_for(rng)

        def loss(p):
            return ac.critic_loss_grad(nets.MLP(q.widths, q.activation, p),
                                       d["s"], d["a_i"], d["a_opp"], d["y"], low, high)[0]

        _, grad = ac.critic_loss_grad(q, d["s"], d["a_i"], d["a_opp"], d["y"], low, high)
        return loss, grad, q.params

    def policy(rng):
        q, pi, _, _, d = nets_for(rng)

        def loss(p):
            return ac.policy_loss_grad(nets.MLP(pi.widths, pi.activation, p), q,
                                       d["s"], d["a_hat"], d["eps"], 1.0, low, high)[0]

        _, grad = ac.policy_loss_grad(pi, q, d["s"], d["a_hat"], d["eps"], 1.0, low, high)
        return loss, grad, pi.params

    def model(rng):
        q, pi, rho, prior, d = nets_for(rng)

        def loss(p):
            return ac.model_loss_grad(nets.MLP(rho.widths, rho.activation, p), pi, prior, q,
                                      d["s"], d["a_i"], d["eps"], 1.0, low, high)[0]

        _, grad = ac.model_loss_grad(rho, pi, prior, q, d["s"], d["a_i"], d["eps"], 1.0, low, high)
        return loss, grad, rho.params

    def prior_fit(rng):
        _, _, _, prior, d = nets_for(rng)

        def loss(p):
            return ac.prior_loss_grad(nets.MLP(prior.widths, prior.activation, p),
                                      d["s"], d["a_opp"], low, high)[0]

        _, grad = ac.prior_loss_grad(prior, d["s"], d["a_opp"], low, high)
        return loss, grad, prior.params

    return {"ac/critic": critic, "ac/policy": policy, "ac/model": model, "ac/prior": prior_fit}


def check_vbar(seed: int = 0) -> dict:
    """K-sample soft-value estimate is consistent against the exact value on
    the climbing game (alpha = 1): error shrinks with K and is < 1e-2 at 1e5."""
    rng = np.random.default_rng(seed)
    game = games.climbing_game()
    q = game.payoff_view(0)
    prior = soft_tables.uniform_prior(1, 3)
    exact = float(soft_tables.soft_value(q, prior, 1.0)[0])
    pi = np.full((1, 3, 3), 1.0 / 3.0)
    rho = np.full((1, 3), 1.0 / 3.0)
    errors = {}
    for k in (10, 1000, 100_000):
        est = qlearner.v_bar_estimate(q, pi, rho, prior, 0, k, 1.0, rng)
        errors[k] = abs(est - exact)
    decreasing = errors[10] >= errors[1000] >= errors[100_000]
    worst = errors[100_000] if decreasing else np.inf
    return _report("vbar-consistency", 3, float(worst), 1e-2,
                   {"errors": {str(k): float(v) for k, v in errors.items()}, "exact": exact})


def _report(suite: str, cases: int, worst: float, threshold: float, example) -> dict:
    return {
        "suite": suite,
        "cases": cases,
        "worst_margin": worst,
        "threshold": threshold,
        "passed": bool(worst <= threshold),
        "detail": example,
    }


CHECK_SUITES = {
    "contraction": check_contraction,
    "monotone": check_monotone,
    "gradients": check_gradients,
    "vbar": check_vbar,
}


def run_checks(suite: str) -> list[dict]:
    if not suite:
        raise ConfigError("check: empty suite id; expected one of "
                          f"{sorted(CHECK_SUITES)} or 'all'")
    if suite == "all":
        return [fn() for fn in CHECK_SUITES.values()]
    if suite not in CHECK_SUITES:
        raise ConfigError(f"check: unknown suite {suite!r}; expected one of "
                          f"{sorted(CHECK_SUITES)} or 'all'")
    return [CHECK_SUITES[suite]()]


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

def _load_trials(results_dir: Path) -> list[dict]:
    trials = []
    for path in sorted(results_dir.glob("trial_*.csv"),
                       key=lambda p: int(p.stem.split("_")[1])):
        with path.open() as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
        trials.append({k: np.array([float(r[k]) for r in rows]) for k in rows[0]})
    return trials


def plot_results(results_dir) -> list[Path]:
    """Render SVG figures from a results directory (CSV is canonical; plots
    are a convenience and need matplotlib)."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as e:
        raise RuntimeError("plotting requires matplotlib (install extra 'plots')") from e

    results_dir = Path(results_dir)
    trials = _load_trials(results_dir)
    if not trials:
        raise ConfigError(f"plot: no trial CSVs found in {results_dir}")
    made = []
    episodes = trials[0]["episode"]
    rewards = np.stack([t["reward"] for t in trials])

    fig, axis = plt.subplots(figsize=(6, 4))
    mean = rewards.mean(axis=0)
    axis.plot(episodes, mean, label="mean reward")
    if len(trials) > 1:
        sd = rewards.std(axis=0)
        axis.fill_between(episodes, mean - sd, mean + sd, alpha=0.25)
    axis.set_xlabel("episode")
    axis.set_ylabel("mean reward")
    axis.legend()
    path = results_dir / "learning_curve.svg"
    fig.savefig(path)
    plt.close(fig)
    made.append(path)

    if "joint_opt_prob" in trials[0]:
        fig, axis = plt.subplots(figsize=(6, 4))
        joint = np.stack([t["joint_opt_prob"] for t in trials])
        axis.plot(episodes, joint.mean(axis=0))
        axis.set_xlabel("episode")
        axis.set_ylabel("joint probability of the optimal action")
        axis.set_ylim(-0.02, 1.02)
        path = results_dir / "convergence.svg"
        fig.savefig(path)
        plt.close(fig)
        made.append(path)

        fig, axis = plt.subplots(figsize=(6, 4))
        t0 = trials[0]
        axis.plot(episodes, t0["a0_rho_a"], label="agent 0 model of opponent")
        axis.plot(episodes, t0["a1_pi_a"], "--", label="agent 1 policy")
        axis.plot(episodes, t0["a0_prior_a"], ":", label="agent 0 empirical prior")
        axis.set_xlabel("episode")
        axis.set_ylabel("probability of the optimal action")
        axis.legend()
        path = results_dir / "model_vs_policy.svg"
        fig.savefig(path)
        plt.close(fig)
        made.append(path)

    if "a0_action_mean" in trials[0]:
        fig, axis = plt.subplots(figsize=(5, 5))
        for t in trials:
            axis.scatter(t["a0_action_mean"], t["a1_action_mean"], s=6, alpha=0.5)
        axis.set_xlim(-10, 10)
        axis.set_ylim(-10, 10)
        axis.set_xlabel("agent 0 mean action")
        axis.set_ylabel("agent 1 mean action")
        path = results_dir / "actions.svg"
        fig.savefig(path)
        plt.close(fig)
        made.append(path)
    return made
