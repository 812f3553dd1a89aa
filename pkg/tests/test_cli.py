import os

import numpy as np
import pytest

from rgbdsde.cli import run
from rgbdsde.config import parse_config
from rgbdsde.errors import ValidationError
from rgbdsde.scenarios import SCENARIOS


BASE = """
[problem]
scenario = constant-terminal

[monte_carlo]
n_paths = 32
seed = 7
"""


@pytest.fixture()
def cfg_path(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(BASE, encoding="utf-8")
    return str(path)


def out(tmp_path, name):
    return str(tmp_path / name)


def test_scenarios_catalogue(capsys):
    assert run(["scenarios"]) == 0
    text = capsys.readouterr().out
    assert "poisson-example" in text
    for name in SCENARIOS:
        assert name in text


def test_solve_constant_terminal(cfg_path, tmp_path, capsys):
    code = run(["solve", "--config", cfg_path, "--out", out(tmp_path, "o")])
    assert code == 0
    assert "Y_0 = 1" in capsys.readouterr().out
    for artifact in ("manifest.txt", "solver_report.csv", "solution.npz", "summary.txt"):
        assert os.path.exists(tmp_path / "o" / artifact)


def test_reruns_are_byte_identical(cfg_path, tmp_path):
    assert run(["solve", "--config", cfg_path, "--out", out(tmp_path, "a")]) == 0
    assert run(["solve", "--config", cfg_path, "--out", out(tmp_path, "b")]) == 0
    a = (tmp_path / "a" / "solver_report.csv").read_bytes()
    b = (tmp_path / "b" / "solver_report.csv").read_bytes()
    assert a == b


def test_seed_flag_changes_output(cfg_path, tmp_path):
    run(["simulate", "--config", cfg_path, "--set", "model.atoms=1:1",
         "--set", "model.sigma0=0", "--set", "grid.n_steps=5",
         "--set", "monte_carlo.n_paths=3", "--out", out(tmp_path, "s1")])
    run(["simulate", "--config", cfg_path, "--set", "model.atoms=1:1",
         "--set", "model.sigma0=0", "--set", "grid.n_steps=5",
         "--set", "monte_carlo.n_paths=3", "--seed", "12345",
         "--out", out(tmp_path, "s2")])
    a = (tmp_path / "s1" / "paths.csv").read_bytes()
    b = (tmp_path / "s2" / "paths.csv").read_bytes()
    assert a != b


def test_unknown_key_is_validation_error(cfg_path, tmp_path):
    assert run(["solve", "--config", cfg_path, "--set", "solver.bogus=1",
                "--out", out(tmp_path, "x")]) == 1


def test_unknown_scenario_is_validation_error(tmp_path):
    assert run(["solve", "--set", "problem.scenario=nope",
                "--out", out(tmp_path, "x")]) == 1


def test_missing_scenario_is_validation_error(tmp_path):
    assert run(["solve", "--out", out(tmp_path, "x")]) == 1


def test_singular_regression_is_solver_error(cfg_path, tmp_path):
    code = run(["solve", "--config", cfg_path, "--set", "solver.ridge=0",
                "--set", "solver.degree=2", "--out", out(tmp_path, "x")])
    assert code == 2


def test_verify_clean_and_corrupted(cfg_path, tmp_path):
    o = out(tmp_path, "v")
    assert run(["verify", "--config", cfg_path, "--out", o]) == 0
    assert os.path.exists(tmp_path / "v" / "properties.json")

    # produce a solution archive via solve, corrupt K, verify the fixture
    assert run(["solve", "--config", cfg_path, "--out", out(tmp_path, "s")]) == 0
    archive = dict(np.load(str(tmp_path / "s" / "solution.npz"), allow_pickle=False))
    K = archive["K"].copy()
    K[:, 5] = K[:, 4] - 1.0
    archive["K"] = K
    corrupted = str(tmp_path / "corrupted.npz")
    np.savez(corrupted, **archive)
    code = run(["verify", "--config", cfg_path, "--load", corrupted,
                "--out", out(tmp_path, "vc")])
    assert code == 3
    text = (tmp_path / "vc" / "properties.txt").read_text()
    assert "FAIL k_monotone" in text


def test_sweep_outputs_monotone_rows(cfg_path, tmp_path):
    o = out(tmp_path, "w")
    code = run(["sweep", "--config", cfg_path,
                "--set", "problem.scenario=deterministic-obstacle",
                "--set", "grid.n_steps=400",
                "--set", "solver.n_list=1,2,4,8",
                "--set", "monte_carlo.n_paths=4", "--out", o])
    assert code == 0
    lines = (tmp_path / "w" / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "n,Y0,K_T,skorokhod_residual"
    assert len(lines) == 5
    y0s = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(b > a for a, b in zip(y0s, y0s[1:]))


def test_basis_subcommand(cfg_path, tmp_path, capsys):
    code = run(["basis", "--config", cfg_path, "--set", "model.atoms=1:1,-1:1",
                "--set", "model.sigma0=0", "--set", "model.m=2",
                "--out", out(tmp_path, "b")])
    assert code == 0
    text = capsys.readouterr().out
    assert "effective_dim = 2" in text
    header = (tmp_path / "b" / "basis.csv").read_text().splitlines()[0]
    assert header == "i,k,c_ik,degenerate_row"


def test_reflect_subcommand(cfg_path, tmp_path):
    code = run(["reflect", "--config", cfg_path,
                "--set", "problem.scenario=poisson-example",
                "--set", "monte_carlo.n_paths=5", "--out", out(tmp_path, "r")])
    assert code == 0
    assert os.path.exists(tmp_path / "r" / "reflected.csv")
    assert os.path.exists(tmp_path / "r" / "invariance.txt")


def test_reflect_requires_reflected_scenario(cfg_path, tmp_path):
    code = run(["reflect", "--config", cfg_path, "--out", out(tmp_path, "r")])
    assert code == 1  # constant-terminal has no reflected dynamics


def test_surface_subcommand(cfg_path, tmp_path):
    code = run(["surface", "--config", cfg_path,
                "--set", "problem.scenario=deterministic-obstacle",
                "--set", "surface.t_points=3", "--set", "surface.x_points=5",
                "--set", "surface.dt=0.05",
                "--set", "monte_carlo.n_paths=4", "--out", out(tmp_path, "sf")])
    assert code == 0
    header = (tmp_path / "sf" / "surface.csv").read_text().splitlines()[0]
    assert header == "t,x,u,stderr,u_minus_h,neumann_residual"


def test_surface_requires_surface_scenario(cfg_path, tmp_path):
    code = run(["surface", "--config", cfg_path,
                "--set", "problem.scenario=linear-ode", "--out", out(tmp_path, "sf")])
    assert code == 1


def test_example_poisson_subcommand(cfg_path, tmp_path):
    code = run(["example-poisson", "--config", cfg_path,
                "--set", "monte_carlo.n_paths=64", "--out", out(tmp_path, "ep")])
    assert code == 0
    assert os.path.exists(tmp_path / "ep" / "example_poisson.txt")


def test_manifest_always_written(cfg_path, tmp_path):
    o = out(tmp_path, "m")
    run(["solve", "--config", cfg_path, "--set", "solver.ridge=0",
         "--set", "solver.degree=2", "--out", o])  # fails with exit 2
    assert os.path.exists(tmp_path / "m" / "manifest.txt")
    text = (tmp_path / "m" / "manifest.txt").read_text()
    assert "seed = 7" in text and "[problem]" in text


def test_config_round_trip_per_scenario():
    for name in SCENARIOS:
        cfg = parse_config(text=f"[problem]\nscenario = {name}\n")
        echo = cfg.echo()
        again = parse_config(text=echo)
        assert again.echo() == echo
        assert again.get("problem", "scenario") == name


def test_override_syntax_validation():
    with pytest.raises(ValidationError):
        parse_config(overrides=["solverdegree=2"])
    with pytest.raises(ValidationError):
        parse_config(overrides=["solver.degree"])
    with pytest.raises(ValidationError):
        parse_config(text="[solver]\ndegree = -1\n")
