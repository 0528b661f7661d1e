import csv
import json
from pathlib import Path

import numpy as np
import pytest

from dbqite.experiments import (
    ConfigError,
    emit_report,
    error_order_report,
    geometric_ratio,
    growth_ratio,
    load_config,
    loglog_slope,
    materialize,
    run_convergence,
    run_saddle,
)
from dbqite.models import HeisenbergParams, build_heisenberg, singlet_state
from dbqite.operators import write_state


def small_convergence(tmp_path, **extra):
    raw = {
        "name": "conv",
        "model": {"L": 4},
        "initial_states": [{"type": "singlet"}],
        "methods": [{"type": "dbqite", "formula": "gc"}, {"type": "dbqite", "formula": "hopf"}],
        "steps": 3,
        "output_dir": str(tmp_path / "out"),
    }
    raw.update(extra)
    return raw


def test_defaults_materialised(tmp_path):
    cfg = materialize(small_convergence(tmp_path), "convergence")
    assert cfg["model"] == {"L": 4, "J": 1.0, "B": 0.5, "boundary": "open"}
    m = cfg["methods"][0]
    assert (m["alpha"], m["beta"], m["grid_points"], m["grid_max"]) == (10.0, 1.0, 20, 1.0)
    assert cfg["gate_counts"]["enabled"] is True
    assert materialize(small_convergence(tmp_path), "saddle")["track"] == [0, 1, 2, 4]


@pytest.mark.parametrize(
    "patch,match",
    [
        ({"model": {"L": 4, "boundary": "ring"}}, "invalid config"),
        ({"methods": [{"type": "dbqite", "formula": "magnus"}]}, "invalid config"),
        ({"model": {"L": 15}}, "dense cap"),
        ({"track": [99]}, "exceed"),
        ({"bogus": 1}, "invalid config"),
        ({"methods": [{"type": "ite"}, {"type": "ite"}]}, "unique"),
        ({"initial_states": [{"type": "file", "path": "missing.txt"}]}, "does not exist"),
    ],
)
def test_config_errors(tmp_path, patch, match):
    with pytest.raises(ConfigError, match=match):
        materialize(small_convergence(tmp_path, **patch), "convergence", tmp_path)


def test_convergence_outputs(tmp_path):
    run_convergence(materialize(small_convergence(tmp_path), "convergence"))
    out = tmp_path / "out"
    rows = list(csv.DictReader((out / "conv.csv").open()))
    assert len(rows) == 2 * 4
    assert list(rows[0])[:7] == ["state", "method", "k", "t", "s", "E", "V"]
    gc = [r for r in rows if r["method"] == "dbqite-gc"]
    assert [int(r["u0_queries"]) for r in gc] == [1, 3, 9, 27]
    summary = json.loads((out / "conv.summary.json").read_text())
    assert summary["singlet/dbqite-gc"]["energy_strictly_decreasing"]
    assert summary["singlet/dbqite-hopf"]["u0_query_ratio"] == pytest.approx(5.0)
    meta = json.loads((out / "conv.meta.json").read_text())
    assert meta["config"]["methods"][0]["alpha"] == 10.0
    assert "depth" in meta["conventions"]


def test_csv_is_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_convergence(materialize(small_convergence(tmp_path, output_dir=str(a)), "convergence"))
    run_convergence(materialize(small_convergence(tmp_path, output_dir=str(b)), "convergence"))
    assert (a / "conv.csv").read_bytes() == (b / "conv.csv").read_bytes()
    assert (a / "conv.summary.json").read_bytes() == (b / "conv.summary.json").read_bytes()


def test_file_state_and_relative_paths(tmp_path):
    write_state(singlet_state(4), tmp_path / "psi.txt")
    raw = small_convergence(tmp_path, initial_states=[{"type": "file", "path": "psi.txt"}], output_dir="res")
    (tmp_path / "cfg.json").write_text(json.dumps(raw))
    cfg = load_config(tmp_path / "cfg.json", "convergence")
    records = run_convergence(cfg)
    assert (tmp_path / "res" / "conv.csv").exists()
    # no U0 circuit for a plain state file: counts are skipped, not faked
    assert records[0].extras["counts_skipped"]
    assert records[0].rows[1]["E"] < records[0].rows[0]["E"]


def test_saddle_run(tmp_path):
    raw = {
        "name": "sad",
        "model": {"L": 4},
        "initial_states": [{"type": "saddle", "k": 1, "high_index": 5}],
        "methods": [{"type": "ite", "tau_max": 5.0, "points": 11}, {"type": "dbqite"}],
        "track": [0, 1],
        "steps": 2,
        "output_dir": str(tmp_path),
    }
    records = run_saddle(materialize(raw, "saddle"))
    ite = records[0]
    assert [r["t"] for r in ite.rows] == pytest.approx(np.linspace(0, 5, 11))
    assert ite.rows[-1]["E"] <= ite.rows[0]["E"]
    assert (tmp_path / "sad.csv").exists()


def test_fit_helpers():
    xs = np.array([1e-3, 1e-2, 1e-1])
    assert loglog_slope(xs, 3 * xs**1.5) == pytest.approx(1.5)
    counts = [7]
    for _ in range(5):
        counts.append(3 * counts[-1] + 11)
    assert growth_ratio(counts) == pytest.approx(3.0)
    assert geometric_ratio([1, 5, 25, 125]) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        growth_ratio([1, 2])


def test_emit_report_empty():
    assert emit_report([]) == {}


def test_error_order_report():
    h = build_heisenberg(HeisenbergParams(4))
    rep = error_order_report(h, singlet_state(4))
    assert rep["gc_slope"] == pytest.approx(1.5, abs=0.2)
    assert rep["hopf_slope"] == pytest.approx(2.0, abs=0.2)
    assert rep["trotter_slope"] == pytest.approx(3.0, abs=0.3)


@pytest.mark.parametrize("name,kind", [("convergence", "convergence"), ("saddle", "saddle")])
def test_shipped_configs_validate(name, kind):
    path = Path(__file__).resolve().parent.parent / "configs" / f"{name}.json"
    cfg = load_config(path, kind)
    assert cfg["model"]["boundary"] == "open"
