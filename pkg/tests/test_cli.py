import csv
import io

import numpy as np
import pytest

from deepmg.cli import cmd_compare_init, cmd_sweep, cmd_train, main
from deepmg.experiment import ExperimentSpec, point_seed


def table(text):
    """Header comments and data rows of a CSV written by the CLI."""
    lines = text.splitlines()
    header = [l[2:] for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    blocks = "\n".join(body).split("\n\n")[0]
    return header, list(csv.DictReader(io.StringIO(blocks)))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_poisson(capsys):
    code, out, _ = run(capsys, "eval", "--problem", "poisson", "--n", "63")
    assert code == 0
    header, rows = table(out)
    assert abs(float(rows[0]["rho"]) - 0.061728) < 5e-7
    assert float(rows[0]["surrogate"]) > 0
    assert "seed=0" in header


def test_eval_helmholtz(capsys):
    code, out, _ = run(capsys, "eval", "--problem", "helmholtz", "--n", "23", "--k", "20")
    assert code == 0
    assert abs(float(table(out)[1][0]["rho"]) - 3.388036) < 1e-3


def test_convdiff_precondition_exits_2(capsys):
    h = 1 / 64
    code, _, err = run(capsys, "eval", "--problem", "convdiff", "--n", "63", "--eps", repr(h))
    assert code == 2
    assert "configuration error" in err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("problem = poisson\nn = 15\nlearning_rate = 3\n")
    code, _, err = run(capsys, "eval", "--config", str(cfg))
    assert code == 2
    assert "learning_rate" in err


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# Helmholtz at low frequency\nproblem = helmholtz\nn = 23\nk = 5\nseed = 12\n")
    code, out, _ = run(capsys, "eval", "--config", str(cfg), "--k", "20")
    assert code == 0
    header, rows = table(out)
    assert "k=20.0" in header and "seed=12" in header
    assert abs(float(rows[0]["rho"]) - 3.388036) < 1e-3


def test_invalid_grid_exits_2(capsys):
    assert run(capsys, "eval", "--problem", "poisson", "--n", "32")[0] == 2


def train_files(tmp_path, name, *extra):
    prefix = str(tmp_path / name)
    code = main(["train", "--problem", "poisson", "--n", "15", "--T", "30", "--step", "1e-3",
                 "--seed", "5", "--out", prefix, *extra])
    assert code == 0
    return {s: open(f"{prefix}.{s}.csv").read() for s in ("summary", "loss", "operators")}, prefix


def test_train_outputs_are_reproducible(tmp_path, capsys):
    a, _ = train_files(tmp_path, "a")
    b, _ = train_files(tmp_path, "a")
    assert a == b
    header, rows = table(a["summary"])
    assert "seed=5" in header
    assert len(table(a["loss"])[1]) == 30
    assert "# deepmg train" in a["operators"]


def test_eval_round_trips_trained_operators(tmp_path, capsys):
    files, prefix = train_files(tmp_path, "rt")
    trained = float(table(files["summary"])[1][0]["rho"])
    capsys.readouterr()
    code, out, _ = run(capsys, "eval", "--problem", "poisson", "--n", "15",
                       "--operators", prefix + ".operators.csv")
    assert code == 0
    assert abs(float(table(out)[1][0]["rho"]) - trained) <= 1e-10


def test_operator_size_mismatch_exits_2(tmp_path, capsys):
    _, prefix = train_files(tmp_path, "mm")
    code, _, _ = run(capsys, "eval", "--problem", "poisson", "--n", "31", "--operators", prefix + ".operators.csv")
    assert code == 2


def test_single_point_k_sweep_matches_train():
    spec = ExperimentSpec.from_mapping(dict(problem="helmholtz", n=31, k=1.0, T=40, step=1e-3, seed=3,
                                            axis="k", start=1.0, stop=1.0, num=1))
    _, rows = table(cmd_sweep(spec))
    assert len(rows) == 1
    single = ExperimentSpec.from_mapping(dict(problem="helmholtz", n=31, k=1.0, T=40, step=1e-3,
                                              seed=point_seed(3, 0)))
    report = cmd_train(single)[3]
    assert float(rows[0]["rho_dmg"]) == report.rho
    assert float(rows[0]["rho_linear"]) == report.rho_init


def test_sweep_requires_axis(capsys):
    assert run(capsys, "sweep", "--problem", "helmholtz", "--n", "15")[0] == 2


def test_compare_init_zero_budget():
    spec = ExperimentSpec.from_mapping(dict(problem="helmholtz", n=15, k=5.0, T=0))
    header, rows = table(cmd_compare_init(spec))
    assert len(rows) == 1
    assert rows[0]["loss_standard"] == rows[0]["loss_homotopy"]
    assert float(rows[0]["loss_standard"]) > 0
    assert any(h.startswith("rho_standard=") for h in header)


def test_compare_init_low_frequency():
    spec = ExperimentSpec.from_mapping(dict(problem="helmholtz", n=15, k=5.0, T=50, step=1e-3, delta=0.25))
    header, rows = table(cmd_compare_init(spec))
    rho = {h.split("=")[0]: float(h.split("=")[1]) for h in header if h.startswith("rho_")}
    assert rho["rho_standard"] < 0.2 and rho["rho_homotopy"] < 0.2
    assert len(rows) >= 50
    assert all(r["loss_standard"] and r["loss_homotopy"] for r in rows)


def test_check_single_criterion(capsys):
    code, out, _ = run(capsys, "check", "--only", "1")
    assert code == 0
    assert out.count("PASS") == 1


@pytest.mark.slow
def test_eps_sweep_dominates_linear():
    spec = ExperimentSpec.from_mapping(dict(problem="convdiff", n=63, eps=0.1, K=10, N=5, T=500, step=1e-4,
                                            axis="eps", num=5, jobs=5))
    _, rows = table(cmd_sweep(spec))
    assert len(rows) == 5
    wins = sum(float(r["rho_dmg"]) <= float(r["rho_linear"]) for r in rows)
    assert wins >= 4


def test_k_sweep_low_frequency():
    spec = ExperimentSpec.from_mapping(dict(problem="helmholtz", n=225, k=1.0, T=200, step=1e-4, axis="k",
                                            start=1.0, stop=16.0, num=4))
    _, rows = table(cmd_sweep(spec))
    assert [float(r["k"]) for r in rows] == [1.0, 6.0, 11.0, 16.0]
    assert all(float(r["rho_dmg"]) < 0.15 for r in rows)
