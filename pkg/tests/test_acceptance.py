"""Acceptance suite: every promised behavior at its stated tolerance, one
printed PASS line per criterion (run with ``pytest -s`` to see them live).

The two experiment criteria reuse shared module-scoped runs; all runs are
fully seeded, so the suite is reproducible end to end.
"""

import time

import numpy as np
import pytest

from rommeo import games, harness, qlearner, soft_tables


def _announce(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:2d} {status}: {detail}")
    assert ok, detail


# ---------------------------------------------------------------------------
# shared experiment runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def icg_runs():
    """100 seeded trials x 100 single-step episodes for the full learner and
    its empirical-model ablation, same seed set."""
    runs = {}
    for kind in ("rommeo_q", "rommeo_q_emp"):
        cfg = harness.ExperimentConfig(game="climbing", learners=kind,
                                       episodes=100, trials=100, seed=0,
                                       out_dir="unused")
        start = time.perf_counter()
        runs[kind] = [harness.run_trial(cfg, k) for k in range(cfg.trials)]
        runs[kind + "/seconds"] = time.perf_counter() - start
    return runs


@pytest.fixture(scope="module")
def mtq_run():
    """10 seeded trials x 200 episodes x 25 steps of self-play actor-critic."""
    cfg = harness.ExperimentConfig(game="max_two_quadratics", learners="rommeo_ac",
                                   episodes=200, trials=10, seed=0, out_dir="unused")
    start = time.perf_counter()
    results = [harness.run_trial(cfg, k) for k in range(cfg.trials)]
    return results, time.perf_counter() - start


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_1_exact_solver_climbing():
    start = time.perf_counter()
    game = games.climbing_game()
    prior = soft_tables.uniform_prior(1, 3)
    sol = soft_tables.solve_fixed_point(
        game.payoff_view(0), prior, soft_tables.SoftConfig(alpha=1.0, gamma=0.0)
    )
    elapsed = time.perf_counter() - start
    rho_a = sol.rho_star[0, 0]
    pi_aa = sol.pi_star[0, 0, 0]
    ok = (0.970 <= rho_a <= 0.977) and pi_aa >= 0.9999 \
        and sol.joint_argmax() == (0, 0) and elapsed < 1.0
    _announce(1, ok, f"exact solver: rho*(A)={rho_a:.4f}, pi*(A|A)={pi_aa:.6f}, "
                     f"argmax={sol.joint_argmax()}, {elapsed:.3f}s")


def test_criterion_2_contraction():
    start = time.perf_counter()
    report = harness.check_contraction(n_pairs=1000, seed=0)
    elapsed = time.perf_counter() - start
    ok = report["passed"] and elapsed < 10.0
    _announce(2, ok, f"contraction: worst margin {report['worst_margin']:.2e} "
                     f"over {report['cases']} pairs, {elapsed:.1f}s")


def test_criterion_3_monotone_improvement():
    start = time.perf_counter()
    report = harness.check_monotone(n_games=100, rounds=10, seed=0)
    elapsed = time.perf_counter() - start
    ok = report["passed"] and elapsed < 30.0
    _announce(3, ok, f"monotone improvement: worst decrease "
                     f"{report['worst_margin']:.2e} over {report['cases']} games, {elapsed:.1f}s")


def test_criterion_4_tabular_learner_reaches_optimum(icg_runs):
    results = icg_runs["rommeo_q"]
    elapsed = icg_runs["rommeo_q/seconds"]
    reward_ok = np.mean([r.final["final_reward_mean_10"] >= 10.5 for r in results])
    joint_ok = np.mean([r.final["final_joint_opt_prob"] >= 0.9 for r in results])
    ok = reward_ok >= 0.80 and joint_ok >= 0.70 and elapsed < 60.0
    _announce(4, ok, f"tabular learner on the climbing game: "
                     f"{reward_ok:.0%} trials with final-10 reward >= 10.5, "
                     f"{joint_ok:.0%} with joint P(A,A) >= 0.9, {elapsed:.1f}s")


def test_criterion_5_ablation_gap(icg_runs):
    full = np.mean([r.final["converged"] for r in icg_runs["rommeo_q"]])
    ablated = np.mean([r.final["converged"] for r in icg_runs["rommeo_q_emp"]])
    ok = full - ablated >= 0.10
    _announce(5, ok, f"ablation gap: full {full:.0%} vs empirical-model {ablated:.0%} "
                     f"convergence ({(full - ablated) * 100:.0f} points)")


def test_criterion_6_model_leads_policy(icg_runs):
    def first_crossing(series, threshold=0.9):
        hits = np.nonzero(np.asarray(series) >= threshold)[0]
        return int(hits[0]) if hits.size else None

    leads = total = 0
    for result in icg_runs["rommeo_q"]:
        if not result.final["converged"]:
            continue
        for me, opp in (("a0", "a1"), ("a1", "a0")):
            total += 1
            model_t = first_crossing(result.columns[f"{me}_rho_a"])
            policy_t = first_crossing(result.columns[f"{opp}_pi_a"])
            if model_t is not None and (policy_t is None or model_t <= policy_t):
                leads += 1
    fraction = leads / total if total else 0.0
    ok = fraction >= 0.60 and total > 0
    _announce(6, ok, f"opponent model leads the opponent's policy to 0.9 in "
                     f"{fraction:.0%} of {total} converged agent pairs")


def test_criterion_7_actor_critic_reaches_global_optimum(mtq_run):
    results, elapsed = mtq_run
    finals = [r.final["final_reward_mean"] for r in results]
    passed = sum(f >= 9.0 for f in finals)
    ok = passed >= 7 and elapsed < 600.0
    _announce(7, ok, f"actor-critic on max-of-two-quadratics: {passed}/10 seeds "
                     f"with final-episode reward >= 9.0 "
                     f"(finals {[round(f, 2) for f in finals]}), {elapsed:.0f}s")


def test_criterion_8_gradient_suite():
    report = harness.check_gradients(n_cases=100, seed=0)
    ok = report["passed"]
    _announce(8, ok, f"gradients vs finite differences: max relative error "
                     f"{report['worst_margin']:.2e} < 1e-4")


def test_criterion_9_value_estimator_consistency():
    game = games.climbing_game()
    q = game.payoff_view(0)
    prior = soft_tables.uniform_prior(1, 3)
    exact = float(soft_tables.soft_value(q, prior, 1.0)[0])
    pi = np.full((1, 3, 3), 1.0 / 3.0)
    rho = np.full((1, 3), 1.0 / 3.0)
    est = qlearner.v_bar_estimate(q, pi, rho, prior, 0, 100_000, 1.0,
                                  np.random.default_rng(0))
    err = abs(est - exact)
    ok = err < 1e-2
    _announce(9, ok, f"sampled soft-value estimate at K=1e5: |{est:.4f} - {exact:.4f}| "
                     f"= {err:.2e} < 1e-2")


def test_criterion_10_environment_spot_checks():
    reward_55 = games.max_two_quadratics_reward(5.0, 5.0)
    reward_m55 = games.max_two_quadratics_reward(-5.0, -5.0)
    game = games.climbing_game()
    expected = np.array([[11.0, -30.0, 0.0], [-30.0, 7.0, 6.0], [0.0, 0.0, 5.0]])
    ok = reward_55 == 10.0 and reward_m55 == 0.0 \
        and np.array_equal(game.payoffs[0], expected) \
        and np.array_equal(game.payoffs[1], expected)
    _announce(10, ok, f"environment spot checks: reward(5,5)={reward_55}, "
                      f"reward(-5,-5)={reward_m55}, climbing payoffs verified")
