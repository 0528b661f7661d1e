import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from dbqite.cli import main
from dbqite.circuits import read_circuit
from dbqite.compiler import singlet_circuit
from dbqite.models import singlet_state
from dbqite.operators import fidelity, read_pauli, read_state


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    res = runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert res.exit_code == 0, res.output
    return res


@pytest.fixture
def files(tmp_path, runner):
    h, s = tmp_path / "h.txt", tmp_path / "s.txt"
    invoke(runner, "models", "heisenberg", "--L", 4, "--out", h)
    invoke(runner, "models", "singlet", "--L", 4, "--out", s)
    return tmp_path, h, s


def test_models(files, runner):
    tmp, h, s = files
    assert len(read_pauli(h)) == 3 * 3 + 4
    assert np.allclose(read_state(s), singlet_state(4))
    sad = tmp / "sad.txt"
    invoke(runner, "models", "saddle", "--k", 1, "--high-index", 5, "--hamiltonian", h, "--out", sad)
    assert np.linalg.norm(read_state(sad)) == pytest.approx(1.0)


def test_ite_run(files, runner):
    tmp, h, s = files
    out = tmp / "ite.csv"
    invoke(runner, "ite", "run", "--hamiltonian", h, "--state", s, "--tau-max", 2, "--points", 5, "--out", out)
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["tau", "E", "V", "F0", "F1"]
    assert len(rows) == 5
    assert float(rows[-1]["E"]) < float(rows[0]["E"])


def test_dbqite_run_deterministic(files, runner):
    tmp, h, s = files
    a, b = tmp / "a.csv", tmp / "b.csv"
    for out in (a, b):
        invoke(runner, "dbqite", "run", "--hamiltonian", h, "--state", s, "--steps", 3, "--formula", "hopf", "--out", out)
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(a.open()))
    assert list(rows[0]) == ["k", "s_k", "E", "V", "F0", "F1", "improved"]
    assert rows[0]["improved"] == ""
    assert all(r["improved"] in ("0", "1") for r in rows[1:])


def test_compile_counts_simulate(files, runner):
    tmp, h, s = files
    u0 = tmp / "u0.txt"
    invoke(runner, "models", "singlet", "--L", 4, "--out", tmp / "s2.txt", "--circuit", u0)
    assert list(read_circuit(u0).gates()) == list(singlet_circuit(4).gates())
    sched = tmp / "s.json"
    sched.write_text(json.dumps({"schedule": [0.1, 0.05]}))
    circ = tmp / "c.txt"
    invoke(runner, "compile", "dbqite", "--hamiltonian", h, "--u0", u0, "--schedule", sched, "--k", 2, "--mode", "exact", "--out", circ)
    counts = json.loads(invoke(runner, "compile", "counts", "--circuit", circ).output)
    assert counts["u0_queries"] == 9
    assert counts["opaque_count"] > 0
    out = tmp / "o.txt"
    invoke(runner, "simulate", "--circuit", circ, "--out", out)
    side = json.loads((tmp / "o.txt.json").read_text())
    assert side["ancilla_residual"] < 1e-12
    # the compiled circuit improves on the warm start
    psi = read_state(out)
    assert fidelity(psi, singlet_state(4)) < 1.0


def test_experiment_commands(tmp_path, runner):
    cfg = {
        "name": "e",
        "model": {"L": 4},
        "initial_states": [{"type": "singlet"}],
        "methods": [{"type": "dbqite"}],
        "steps": 2,
        "output_dir": "out",
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    invoke(runner, "experiment", "convergence", "--config", p)
    assert (tmp_path / "out" / "e.csv").exists()
    invoke(runner, "experiment", "saddle", "--config", p)


def test_bad_config_reports_error(tmp_path, runner):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"name": "x"}))
    res = runner.invoke(main, ["experiment", "convergence", "--config", str(p)])
    assert res.exit_code != 0
    assert "invalid config" in res.output
