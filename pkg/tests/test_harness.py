import json

import numpy as np
import pytest

from rommeo import cli, harness
from rommeo.harness import ConfigError, ExperimentConfig


def small_discrete_cfg(tmp_path, **overrides):
    base = dict(game="climbing", learners="rommeo_q", episodes=6, trials=2,
                seed=7, out_dir=str(tmp_path / "out"), workers=1)
    base.update(overrides)
    return ExperimentConfig(**base)


def test_config_from_json_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "game": "climbing", "learners": ["rommeo_q", "jal"],
        "episodes": 10, "trials": 3, "seed": 1, "out_dir": "x",
    }))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.learners == ("rommeo_q", "jal")
    assert cfg.episodes == 10


@pytest.mark.parametrize("raw,fragment", [
    ({"game": "chess"}, "config.game"),
    ({"game": "climbing", "learners": "rommeo_ac"}, "config.learners[0]"),
    ({"game": "climbing", "trials": 0}, "config.trials"),
    ({"game": "climbing", "episodes": -2}, "config.episodes"),
    ({"game": "climbing", "workers": 0}, "config.workers"),
    ({"game": "climbing", "bogus_key": 1}, "config.bogus_key"),
])
def test_config_errors_carry_location(tmp_path, raw, fragment):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_json(path)
    assert fragment in str(err.value)


def test_config_invalid_json_reports_position(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_json(path)
    assert "line" in str(err.value)


def test_run_experiment_writes_artifacts(tmp_path):
    cfg = small_discrete_cfg(tmp_path)
    out = harness.run_experiment(cfg)
    assert (out / "trial_0.csv").exists()
    assert (out / "trial_1.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["game"] == "climbing"
    assert summary["config"]["seed"] == 7
    assert summary["library_version"]
    assert len(summary["trials"]) == 2
    assert "convergence_rate" in summary["aggregate"]
    assert "created_unix" in summary["metadata"]
    header = (out / "trial_0.csv").read_text().splitlines()[0]
    assert header.startswith("episode,reward")


def test_runs_are_byte_identical(tmp_path):
    out1 = harness.run_experiment(small_discrete_cfg(tmp_path, out_dir=str(tmp_path / "a")))
    out2 = harness.run_experiment(small_discrete_cfg(tmp_path, out_dir=str(tmp_path / "b")))
    for k in range(2):
        assert (out1 / f"trial_{k}.csv").read_bytes() == (out2 / f"trial_{k}.csv").read_bytes()


def test_results_invariant_to_worker_count(tmp_path):
    seq = harness.run_experiment(small_discrete_cfg(tmp_path, out_dir=str(tmp_path / "w1")))
    par = harness.run_experiment(
        small_discrete_cfg(tmp_path, out_dir=str(tmp_path / "w2"), workers=2)
    )
    for k in range(2):
        assert (seq / f"trial_{k}.csv").read_bytes() == (par / f"trial_{k}.csv").read_bytes()


def test_failed_trials_are_recorded_not_fatal(tmp_path):
    # an invalid learner parameter blows up inside every trial
    cfg = ExperimentConfig(
        game="max_two_quadratics", learners="rommeo_ac", episodes=2, trials=2,
        seed=0, out_dir=str(tmp_path / "boom"), learner_params={"gamma": 2.0},
    )
    out = harness.run_experiment(cfg)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["aggregate"]["completed_trials"] == 0
    assert set(summary["failed_trials"]) == {"0", "1"}
    assert "gamma" in summary["failed_trials"]["0"]


def test_discrete_metrics_are_finite_for_all_learners(tmp_path):
    for kind in harness.DISCRETE_KINDS:
        cfg = small_discrete_cfg(tmp_path, learners=kind, trials=1,
                                 out_dir=str(tmp_path / kind))
        result = harness.run_trial(cfg, 0)
        for name, series in result.columns.items():
            assert np.isfinite(np.asarray(series, dtype=np.float64)).all(), (kind, name)


def test_continuous_trial_writes_expected_columns(tmp_path):
    cfg = ExperimentConfig(
        game="max_two_quadratics", learners="rommeo_ac", episodes=2,
        steps_per_episode=5, trials=1, seed=0, out_dir=str(tmp_path / "c"),
        learner_params={"hidden": [8, 8], "batch_size": 4, "buffer_capacity": 50},
    )
    out = harness.run_experiment(cfg)
    rows = (out / "trial_0.csv").read_text().splitlines()
    assert rows[0].split(",")[:3] == ["episode", "reward", "a0_action_mean"]
    assert len(rows) == 3
    summary = json.loads((out / "summary.json").read_text())
    assert "final_reward_mean" in summary["trials"][0]


def test_solve_game_reports_argmax_and_tables():
    report = harness.solve_game("climbing", alpha=1.0, gamma=0.0)
    assert report["joint_argmax"] == ["A", "A"]
    rho = report["solution"]["rho_star"][0]
    assert 0.970 <= rho[0] <= 0.977
    assert report["solution"]["residual"] <= 1e-10


def test_solve_unknown_game_rejected():
    with pytest.raises(ConfigError):
        harness.solve_game("poker")


def test_run_checks_suite_selection():
    with pytest.raises(ConfigError):
        harness.run_checks("")
    with pytest.raises(ConfigError):
        harness.run_checks("nope")
    reports = harness.run_checks("vbar")
    assert len(reports) == 1
    assert reports[0]["suite"] == "vbar-consistency"
    assert reports[0]["passed"]


def test_plot_results_emits_svgs(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = small_discrete_cfg(tmp_path)
    out = harness.run_experiment(cfg)
    made = harness.plot_results(out)
    names = {p.name for p in made}
    assert "learning_curve.svg" in names
    assert "convergence.svg" in names
    for p in made:
        assert p.exists() and p.stat().st_size > 0


def test_plot_empty_directory_rejected(tmp_path):
    pytest.importorskip("matplotlib")
    with pytest.raises(ConfigError):
        harness.plot_results(tmp_path)


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------

def test_cli_solve_prints_json(capsys):
    assert cli.main(["solve", "--game", "climbing"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["joint_argmax"] == ["A", "A"]


def test_cli_run_with_overrides(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "game": "climbing", "learners": "jal", "episodes": 3, "trials": 5, "seed": 0,
        "out_dir": str(tmp_path / "ignored"),
    }))
    rc = cli.main(["run", "--config", str(cfg_path), "--trials", "1",
                   "--out", str(tmp_path / "cli_out")])
    assert rc == 0
    assert (tmp_path / "cli_out" / "trial_0.csv").exists()
    summary = json.loads((tmp_path / "cli_out" / "summary.json").read_text())
    assert summary["config"]["trials"] == 1


def test_cli_check_unknown_suite_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["check", "--suite", "bogus"])
    assert err.value.code == 2


def test_cli_check_vbar_passes(capsys):
    assert cli.main(["check", "--suite", "vbar"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert json.loads(line)["passed"]


def test_cli_plot(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    cfg = small_discrete_cfg(tmp_path, trials=1)
    out = harness.run_experiment(cfg)
    assert cli.main(["plot", "--results", str(out)]) == 0
    assert "learning_curve.svg" in capsys.readouterr().out
