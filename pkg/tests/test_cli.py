import subprocess
import sys

import pytest

from ader.cli import ALPHA_GRID, KAPPA_GRID, build_parser, main

FAST = ["--hidden", "16,16", "--batch-size", "32", "--warmup", "100", "--eval-episodes", "2"]


def read_echo(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def test_train_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["train", "--env", "grid", "--variant", "basic", "--seed", "1", "--steps", "300",
                 "--eval-every", "150", "--out", str(out)] + FAST)
    assert code == 0
    for name in ("metrics.csv", "visitation.csv", "states.f64", "config.txt"):
        assert (out / name).exists()
    assert (out / "checkpoint" / "actor.bin").exists()
    assert "mean_return" in capsys.readouterr().out


def test_train_variant_td3_binds_hyperparameters(tmp_path):
    out = tmp_path / "td3"
    assert main(["train", "--variant", "td3", "--alpha", "3", "--steps", "200", "--eval-every", "200",
                 "--out", str(out)] + FAST) == 0
    echo = read_echo(out / "config.txt")
    assert (echo["alpha"], echo["kappa"]) == ("1.0", "0.0")


@pytest.mark.parametrize("argv", [
    ["train", "--gamma", "1.5"],
    ["train", "--tau", "0"],
    ["train", "--policy-freq", "0"],
    ["train", "--bogus-flag", "1"],
    ["train", "--variant", "sac"],
    ["train", "--hidden", "0,4"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_defaults_reproduce_table():
    args = build_parser().parse_args(["train"])
    assert (args.actor_lr, args.critic_lr, args.batch_size, args.policy_freq) == (3e-4, 3e-4, 256, 2)
    assert (args.noise_clip, args.explore_noise_std, args.gamma) == (2.0, 0.1, 0.99)
    assert (args.alpha, args.kappa, args.K, args.M, args.tau) == (2.0, 5.0, 10_000, 100_000, 0.005)


def test_help_lists_flags_with_defaults(capsys):
    assert main(["train", "--help"]) == 0
    text = capsys.readouterr().out
    for flag in ("--alpha", "--kappa", "--gamma", "--tau", "--actor-lr", "--critic-lr", "--batch-size",
                 "--policy-freq", "--explore-noise", "--noise-clip", "--K", "--M"):
        assert flag in text
    assert text.count("Table 2") >= 12 and "(default: 0.005)" in text


def test_config_file_then_flags(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# experiment\nalpha = 0.6\nkappa=7\ngamma=0.9\nsteps=200\n")
    from ader.cli import _parse
    args = _parse(build_parser(), ["train", "--config", str(cfg), "--kappa", "2"])
    assert (args.alpha, args.kappa, args.gamma, args.total_env_steps) == (0.6, 2.0, 0.9, 200)


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("learning_rate=3\n")
    assert main(["train", "--config", str(cfg)]) == 2


def test_run_echo_is_a_valid_config(tmp_path):
    out = tmp_path / "a"
    assert main(["train", "--steps", "200", "--eval-every", "200", "--out", str(out)] + FAST) == 0
    again = tmp_path / "b"
    assert main(["train", "--config", str(out / "config.txt"), "--out", str(again)]) == 0
    assert (out / "metrics.csv").read_bytes() == (again / "metrics.csv").read_bytes()


def test_ablate_smoke(tmp_path, capsys):
    out = tmp_path / "abl"
    code = main(["ablate", "--seeds", "2", "--steps", "200", "--eval-every", "200", "--out", str(out)] + FAST)
    assert code == 0
    rows = (out / "ablation.csv").read_text().splitlines()
    assert rows[0] == "variant,seed,final_return,failure_rate,storm_visits"
    assert len(rows) - 1 == 5 * 2
    assert sorted({r.split(",")[0] for r in rows[1:]}) == sorted(["td3", "basic", "no-ri", "no-pu", "ddpg"])
    assert len((out / "summary.csv").read_text().splitlines()) == 6
    printed = capsys.readouterr().out
    assert "no-pu" in printed


def test_gridsearch_manifest(tmp_path):
    assert main(["gridsearch", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "manifest.csv").read_text().splitlines()
    assert len(lines) - 1 == 11 * 10
    assert ALPHA_GRID[0] == 0.0 and ALPHA_GRID[-1] == 3.0 and len(ALPHA_GRID) == 11
    assert KAPPA_GRID == tuple(float(k) for k in range(1, 11))
    assert lines[1] == "0.0,1.0,0" and lines[-1] == "3.0,10.0,0"


def test_analyze_run_directory(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--steps", "300", "--eval-every", "300", "--state-stride", "1", "--out", str(out)] + FAST) == 0
    assert main(["analyze", "--run", str(out), "--bins", "5"]) == 0
    heat = (out / "heatmap.csv").read_text().splitlines()
    assert len(heat) == 26 and sum(int(l.split(",")[2]) for l in heat[1:]) == 300
    assert (out / "pca.txt").exists()


def test_analyze_needs_input():
    assert main(["analyze"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ader", "gridsearch", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "--execute" in res.stdout
