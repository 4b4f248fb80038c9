import numpy as np
import pytest

from rommeo import games
from rommeo.baselines import (
    BaselineConfig,
    EpsilonSchedule,
    FMQLearner,
    JALLearner,
    WoLFPHCLearner,
    rommeo_q_emp,
)
from rommeo.qlearner import QLearnerConfig, RommeoQLearner, Transition


def play(learner, opp_action, game, n):
    for _ in range(n):
        a = learner.act(0)
        r = game.rewards(a, opp_action)[0]
        learner.observe(Transition(0, a, opp_action, 0, r, True))
        learner.train_step()


def test_jal_best_responds_to_stationary_opponent():
    game = games.climbing_game()
    learner = JALLearner(3, 3, BaselineConfig(kind="jal"), seed=0)
    play(learner, 0, game, 400)
    # opponent always plays A; the best response is A (reward 11)
    assert int(np.argmax(learner._expected_values())) == 0
    assert learner.policy_probs(0)[0] > 0.9


def test_jal_tracks_opponent_frequency():
    learner = JALLearner(3, 3, BaselineConfig(kind="jal"), seed=0)
    game = games.climbing_game()
    for b in (0, 0, 2):
        learner.observe(Transition(0, 1, b, 0, game.rewards(1, b)[0], True))
    assert np.allclose(learner.opponent_model_probs(0), [2 / 3, 0, 1 / 3])


def test_fmq_zero_weight_reduces_to_plain_q():
    learner = FMQLearner(3, 3, BaselineConfig(kind="fmq", fmq_weight=0.0), seed=0)
    game = games.climbing_game()
    play(learner, 1, game, 100)
    assert np.array_equal(learner._expected_values(), learner.q)


def test_fmq_bias_prefers_high_max_reward_action():
    learner = FMQLearner(3, 3, BaselineConfig(kind="fmq", fmq_weight=10.0), seed=0)
    # same mean reward for actions 0 and 1, but action 0 once hit a max of 11
    for a, r in ((0, 11.0), (0, -3.0), (1, 4.0), (1, 4.0)):
        learner.observe(Transition(0, a, 0, 0, r, True))
    ev = learner._expected_values()
    assert ev[0] > ev[1]


def test_wolf_policy_stays_on_simplex():
    learner = WoLFPHCLearner(3, 3, BaselineConfig(kind="wolf_phc"), seed=0)
    game = games.climbing_game()
    rng = np.random.default_rng(0)
    for _ in range(500):
        a = learner.act(0)
        b = int(rng.integers(3))
        learner.observe(Transition(0, a, b, 0, game.rewards(a, b)[0], True))
        pi = learner.policy_probs(0)
        assert np.all(pi >= -1e-12)
        assert pi.sum() == pytest.approx(1.0, abs=1e-12)


def test_wolf_moves_toward_best_action_against_stationary_opponent():
    learner = WoLFPHCLearner(3, 3, BaselineConfig(kind="wolf_phc"), seed=0)
    game = games.climbing_game()
    play(learner, 2, game, 600)
    # against an opponent fixed on C the best own action is B (reward 6)
    assert int(np.argmax(learner.pi)) == 1


def test_baselines_deterministic_under_seed():
    game = games.climbing_game()
    for cls in (JALLearner, WoLFPHCLearner, FMQLearner):
        def trace(seed, cls=cls):
            learner = cls(3, 3, BaselineConfig(), seed=seed)
            rng = np.random.default_rng(5)
            out = []
            for _ in range(60):
                a = learner.act(0)
                b = int(rng.integers(3))
                learner.observe(Transition(0, a, b, 0, game.rewards(a, b)[0], True))
                out.append(a)
            return out

        assert trace(3) == trace(3)


def test_epsilon_schedule_decays_to_floor():
    sched = EpsilonSchedule(start=0.4, end=0.05, decay=0.5)
    values = [sched.value(e) for e in range(8)]
    assert values[0] == 0.4
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert values[-1] == 0.05


def test_epsilon_used_by_learners_decays_per_episode():
    learner = JALLearner(3, 3, BaselineConfig(kind="jal"), seed=0)
    eps0 = learner._epsilon()
    game = games.climbing_game()
    play(learner, 0, game, 10)
    assert learner.episode == 10
    assert learner._epsilon() < eps0


def test_rommeo_q_emp_factory_sets_flag():
    cfg = QLearnerConfig(n_actions=3, n_opp_actions=3)
    learner = rommeo_q_emp(cfg, seed=0)
    assert learner.cfg.use_empirical_model
    assert isinstance(learner, RommeoQLearner)
    # the source config is untouched
    assert not cfg.use_empirical_model


def test_baseline_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(lr=1.5)
    with pytest.raises(ValueError):
        BaselineConfig(delta_win=0.3, delta_lose=0.1)
    with pytest.raises(ValueError):
        BaselineConfig(fmq_weight=-1.0)
