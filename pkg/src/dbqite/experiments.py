"""Declarative experiment runner for the convergence and saddle-point studies.

A run is described by one JSON document (see ``CONFIG_SCHEMA``). Every
default is materialised into ``<name>.meta.json`` next to the trajectory CSV
and a ``<name>.summary.json`` report.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from .circuits import Circuit, metrics, read_circuit
from .compiler import CompileConfig, compile_trotter, singlet_circuit, synthesize
from .engine import StepConfig, bracket_flow_target, exact_evolver, gc_step, hopf_step, run_dbqite, trotter_evolver
from .ite import ite_trajectory
from .models import HeisenbergParams, SaddleInitSpec, build_heisenberg, load_state, saddle_state, singlet_state
from .operators import MAX_DENSE_QUBITS, PauliSum, dense, eigensystem, exp_unitary, phase_distance

_STATE_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"type": {"const": "singlet"}, "label": {"type": "string"}},
            "required": ["type"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "saddle"},
                "k": {"type": "integer", "minimum": 1},
                "f0": {"type": "number", "minimum": 0},
                "high_index": {"type": "integer", "minimum": 2},
                "label": {"type": "string"},
            },
            "required": ["type", "k"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "file"},
                "path": {"type": "string"},
                "u0_circuit": {"type": "string"},
                "label": {"type": "string"},
            },
            "required": ["type", "path"],
            "additionalProperties": False,
        },
    ]
}

_METHOD_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "ite"},
                "tau_max": {"type": "number", "exclusiveMinimum": 0},
                "points": {"type": "integer", "minimum": 2},
                "label": {"type": "string"},
            },
            "required": ["type"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "dbqite"},
                "formula": {"enum": ["gc", "hopf"]},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "grid_points": {"type": "integer", "minimum": 2},
                "grid_max": {"type": "number", "exclusiveMinimum": 0},
                "grid_spacing": {"enum": ["linear", "geometric"]},
                "alpha_slot": {"enum": ["hamiltonian", "state"]},
                "evolution": {"enum": ["exact", "trotter"]},
                "label": {"type": "string"},
            },
            "required": ["type"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "model": {
            "type": "object",
            "properties": {
                "L": {"type": "integer", "minimum": 2},
                "J": {"type": "number"},
                "B": {"type": "number"},
                "boundary": {"enum": ["open", "periodic"]},
            },
            "required": ["L"],
            "additionalProperties": False,
        },
        "initial_states": {"type": "array", "items": _STATE_SCHEMA, "minItems": 1},
        "methods": {"type": "array", "items": _METHOD_SCHEMA, "minItems": 1},
        "steps": {"type": "integer", "minimum": 0},
        "track": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "gate_counts": {
            "type": "object",
            "properties": {
                "enabled": {"type": "boolean"},
                "mode": {"enum": ["trotter", "exact"]},
                "trotter_steps": {"type": "integer", "minimum": 1},
                "trotter_order": {"enum": [1, 2]},
                "rz_per_rotation": {"enum": [1, 2]},
            },
            "additionalProperties": False,
        },
        "error_orders": {"type": "boolean"},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer"},
    },
    "required": ["name", "model", "initial_states", "methods"],
    "additionalProperties": False,
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "convergence": {
        "model": {"J": 1.0, "B": 0.5, "boundary": "open"},
        "steps": 5,
        "track": [0, 1],
        "gate_counts": {"enabled": True, "mode": "trotter", "trotter_steps": 2, "trotter_order": 2, "rz_per_rotation": 1},
        "error_orders": False,
        "output_dir": ".",
        "seed": 0,
    },
    "saddle": {
        "model": {"J": 1.0, "B": 0.5, "boundary": "open"},
        "steps": 5,
        "track": [0, 1, 2, 4],
        "gate_counts": {"enabled": False, "mode": "trotter", "trotter_steps": 2, "trotter_order": 2, "rz_per_rotation": 1},
        "error_orders": False,
        "output_dir": ".",
        "seed": 0,
    },
}
ITE_DEFAULTS = {"tau_max": 20.0, "points": 400}
DBQITE_DEFAULTS = {
    "formula": "gc",
    "alpha": 10.0,
    "beta": 1.0,
    "grid_points": 20,
    "grid_max": 1.0,
    "grid_spacing": "linear",
    "alpha_slot": "hamiltonian",
    "evolution": "exact",
}
SADDLE_DEFAULTS = {"f0": 1e-6, "high_index": 10}


class ConfigError(ValueError):
    pass


def materialize(raw: dict, kind: str, base_dir: str | Path = ".") -> dict:
    """Validate ``raw`` and fill in every default; relative paths resolve against ``base_dir``."""
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from None
    defaults = DEFAULTS[kind]
    cfg = copy.deepcopy(raw)
    cfg["model"] = {**defaults["model"], **cfg["model"]}
    for key in ("steps", "track", "error_orders", "output_dir", "seed"):
        cfg.setdefault(key, copy.deepcopy(defaults[key]))
    cfg["gate_counts"] = {**defaults["gate_counts"], **cfg.get("gate_counts", {})}
    base = Path(base_dir)
    states = []
    for i, st in enumerate(cfg["initial_states"]):
        st = dict(st)
        if st["type"] == "saddle":
            st = {**SADDLE_DEFAULTS, **st}
            st.setdefault("label", f"saddle{st['k']}")
        elif st["type"] == "file":
            st["path"] = str(base / st["path"])
            if "u0_circuit" in st:
                st["u0_circuit"] = str(base / st["u0_circuit"])
            for key in ("path", "u0_circuit"):
                if key in st and not Path(st[key]).exists():
                    raise ConfigError(f"initial_states[{i}].{key}: file {st[key]} does not exist")
            st.setdefault("label", Path(st["path"]).stem)
        else:
            st.setdefault("label", "singlet")
        states.append(st)
    cfg["initial_states"] = states
    methods = []
    for m in cfg["methods"]:
        if m["type"] == "ite":
            m = {**ITE_DEFAULTS, **m}
            m.setdefault("label", "ite")
        else:
            m = {**DBQITE_DEFAULTS, **m}
            m.setdefault("label", f"dbqite-{m['formula']}")
        methods.append(m)
    cfg["methods"] = methods
    labels = [m["label"] for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"method labels must be unique, got {labels}")
    L = cfg["model"]["L"]
    if L > MAX_DENSE_QUBITS:
        raise ConfigError(f"L={L} exceeds the dense cap of {MAX_DENSE_QUBITS} sites")
    bad = [j for j in cfg["track"] if j >= 1 << L]
    if bad:
        raise ConfigError(f"tracked eigen-indices {bad} exceed the Hilbert-space dimension {1 << L}")
    cfg["output_dir"] = str(base / cfg["output_dir"])
    cfg["kind"] = kind
    return cfg


def load_config(path: str | Path, kind: str) -> dict:
    path = Path(path)
    return materialize(json.loads(path.read_text()), kind, path.parent)


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    state: str
    method: str
    kind: str  # "ite" or "dbqite"
    rows: list[dict]
    formula: str | None = None
    extras: dict = field(default_factory=dict)


def model_hamiltonian(cfg: dict) -> PauliSum:
    m = cfg["model"]
    return build_heisenberg(HeisenbergParams(m["L"], m["J"], m["B"], m["boundary"]))


def _initial_state(st: dict, h: PauliSum) -> np.ndarray:
    if st["type"] == "singlet":
        return singlet_state(h.n)
    if st["type"] == "saddle":
        return saddle_state(h, SaddleInitSpec(st["k"], st["high_index"], st["f0"]))
    psi = load_state(st["path"])
    if len(psi) != 1 << h.n:
        raise ConfigError(f"{st['path']}: state has {len(psi)} amplitudes, model needs {1 << h.n}")
    return psi


def _u0_circuit(st: dict, h: PauliSum) -> Circuit | None:
    if st["type"] == "singlet":
        return singlet_circuit(h.n)
    if st["type"] == "file" and "u0_circuit" in st:
        return read_circuit(st["u0_circuit"])
    return None


def _step_config(m: dict) -> StepConfig:
    return StepConfig(
        formula=m["formula"],
        alpha=m["alpha"],
        beta=m["beta"],
        grid_points=m["grid_points"],
        grid_max=m["grid_max"],
        grid_spacing=m["grid_spacing"],
        alpha_slot=m["alpha_slot"],
    )


def _run_ite(psi0, h, m, track) -> list[dict]:
    taus = np.linspace(0.0, m["tau_max"], m["points"])
    traj = ite_trajectory(psi0, h, taus, track)
    rows = []
    for i, tau in enumerate(taus):
        row = {"k": "", "t": float(tau), "s": "", "E": float(traj.energies[i]), "V": float(traj.variances[i])}
        row.update({f"F{j}": float(traj.fidelities[j][i]) for j in track})
        rows.append(row)
    return rows


def _run_dbqite(psi0, h, m, cfg, u0: Circuit | None) -> tuple[list[dict], dict]:
    track = cfg["track"]
    step_cfg = _step_config(m)
    gc_cfg = cfg["gate_counts"]
    evolve = (
        trotter_evolver(h, gc_cfg["trotter_steps"], gc_cfg["trotter_order"])
        if m["evolution"] == "trotter"
        else exact_evolver(h)
    )
    traj = run_dbqite(psi0, h, cfg["steps"], step_cfg, track, evolve=evolve, keep_states=False)
    cum = traj.cumulative_duration
    rows = []
    counts = []
    for k in range(traj.steps + 1):
        row = {
            "k": k,
            "t": float(cum[k]),
            "s": float(traj.schedule[k - 1]) if k else "",
            "E": traj.energies[k],
            "V": traj.variances[k],
        }
        row.update({f"F{j}": traj.fidelities[j][k] for j in track})
        row["improved"] = int(traj.improved[k - 1]) if k else ""
        if gc_cfg["enabled"] and u0 is not None:
            ccfg = CompileConfig.from_step_config(
                step_cfg,
                mode=gc_cfg["mode"],
                trotter_steps=gc_cfg["trotter_steps"],
                trotter_order=gc_cfg["trotter_order"],
            )
            gm = metrics(synthesize(u0, h, traj.schedule, k, ccfg), rz_per_rotation=gc_cfg["rz_per_rotation"])
            row.update({"u3": gm.u3_count, "cx": gm.cx_count, "depth": gm.depth, "u0_queries": gm.u0_queries})
            counts.append(gm.as_dict())
        rows.append(row)
    extras = {"schedule": traj.schedule, "improved": traj.improved, "grid": [float(s) for s in step_cfg.grid()]}
    if counts:
        extras["counts"] = counts
    return rows, extras


def run_experiment(cfg: dict) -> list[RunRecord]:
    h = model_hamiltonian(cfg)
    records = []
    for st in cfg["initial_states"]:
        psi0 = _initial_state(st, h)
        u0 = _u0_circuit(st, h)
        for m in cfg["methods"]:
            if m["type"] == "ite":
                rows = _run_ite(psi0, h, m, cfg["track"])
                records.append(RunRecord(st["label"], m["label"], "ite", rows))
            else:
                rows, extras = _run_dbqite(psi0, h, m, cfg, u0)
                if cfg["gate_counts"]["enabled"] and u0 is None:
                    extras["counts_skipped"] = "no U0 circuit for this initial state"
                records.append(RunRecord(st["label"], m["label"], "dbqite", rows, m["formula"], extras))
    return records


def run_convergence(cfg: dict, write: bool = True) -> list[RunRecord]:
    """Convergence study: DB-QITE trajectories with per-step gate metrics."""
    if cfg.get("kind") != "convergence":
        cfg = materialize({k: v for k, v in cfg.items() if k != "kind"}, "convergence")
    records = run_experiment(cfg)
    summary = emit_report(records)
    if cfg["error_orders"]:
        summary["error_orders"] = error_order_report(model_hamiltonian(cfg), _initial_state(cfg["initial_states"][0], model_hamiltonian(cfg)))
    if write:
        write_outputs(cfg, records, summary)
    return records


def run_saddle(cfg: dict, write: bool = True) -> list[RunRecord]:
    """Saddle-point study: ITE on a tau grid and DB-QITE versus cumulative duration."""
    if cfg.get("kind") != "saddle":
        cfg = materialize({k: v for k, v in cfg.items() if k != "kind"}, "saddle")
    records = run_experiment(cfg)
    summary = emit_report(records)
    if write:
        write_outputs(cfg, records, summary)
    return records


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def growth_ratio(counts: Sequence[float]) -> float:
    """Least-squares ``r`` in the affine recursion ``c_k = r c_{k-1} + d``."""
    c = np.asarray(counts, dtype=float)
    if len(c) < 3:
        raise ValueError("need at least three counts to fit a growth ratio")
    a = np.column_stack([c[:-1], np.ones(len(c) - 1)])
    r, _ = np.linalg.lstsq(a, c[1:], rcond=None)[0]
    return float(r)


def geometric_ratio(counts: Sequence[float]) -> float:
    """``exp`` of the log-linear slope of ``counts`` against ``k``."""
    c = np.asarray(counts, dtype=float)
    return float(np.exp(np.polyfit(np.arange(len(c)), np.log(c), 1)[0]))


def _strict(seq: Sequence[float], increasing: bool) -> bool:
    d = np.diff(np.asarray(seq, dtype=float))
    return bool(np.all(d > 0) if increasing else np.all(d < 0))


def emit_report(records: Sequence[RunRecord]) -> dict:
    summary: dict[str, Any] = {}
    for rec in records:
        energies = [r["E"] for r in rec.rows]
        entry: dict[str, Any] = {
            "kind": rec.kind,
            "initial_energy": energies[0],
            "final_energy": energies[-1],
            "initial_fidelities": {k: v for k, v in rec.rows[0].items() if k.startswith("F")},
            "final_fidelities": {k: v for k, v in rec.rows[-1].items() if k.startswith("F")},
        }
        if rec.kind == "dbqite":
            entry["schedule"] = rec.extras.get("schedule", [])
            entry["energy_gains"] = [a - b for a, b in zip(energies, energies[1:])]
            entry["energy_strictly_decreasing"] = _strict(energies, False)
            if "F0" in rec.rows[0]:
                entry["f0_strictly_increasing"] = _strict([r["F0"] for r in rec.rows], True)
            counts = rec.extras.get("counts")
            if counts and len(counts) >= 3:
                entry["count_ratios"] = {
                    key: growth_ratio([c[key] for c in counts]) for key in ("u3_count", "cx_count", "depth")
                }
                entry["u0_query_ratio"] = geometric_ratio([c["u0_queries"] for c in counts])
                entry["tail_cx_ratio"] = counts[-1]["cx_count"] / counts[-2]["cx_count"]
        summary[f"{rec.state}/{rec.method}"] = entry
    return summary


def error_order_report(h: PauliSum, omega: np.ndarray, s_values: Sequence[float] = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)) -> dict:
    """Log-log slopes of the GC/HOPF step errors and of the second-order Trotter error."""
    s_values = list(s_values)
    gc_err = [phase_distance(gc_step(omega, h, s), bracket_flow_target(omega, h, s)) for s in s_values]
    hopf_err = [phase_distance(hopf_step(omega, h, s), bracket_flow_target(omega, h, s)) for s in s_values]
    out = {"s_values": s_values, "gc_slope": loglog_slope(s_values, gc_err), "hopf_slope": loglog_slope(s_values, hopf_err)}
    if h.n <= 6:
        from .simulator import circuit_unitary

        thetas = [0.02, 0.05, 0.1, 0.2]
        hm = dense(h)
        errs = [np.linalg.norm(circuit_unitary(compile_trotter(h, t, 1)) - exp_unitary(hm, t), 2) for t in thetas]
        out["trotter_thetas"] = thetas
        out["trotter_slope"] = loglog_slope(thetas, errs)
    return out


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(records: Sequence[RunRecord], track: Sequence[int]) -> str:
    columns = ["state", "method", "k", "t", "s", "E", "V"] + [f"F{j}" for j in track] + [
        "improved",
        "u3",
        "cx",
        "depth",
        "u0_queries",
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        for row in rec.rows:
            full = {"state": rec.state, "method": rec.method, **row}
            writer.writerow([_cell(full.get(c, "")) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_outputs(cfg: dict, records: Sequence[RunRecord], summary: dict) -> dict[str, Path]:
    out = Path(cfg["output_dir"])
    name = cfg["name"]
    es = eigensystem(model_hamiltonian(cfg))
    meta = {
        "config": cfg,
        "conventions": {
            "qubit_order": "site 1 is the most significant bit",
            "depth": "greedy earliest-slot schedule over the flattened gate list",
            "u3_count": "every single-qubit gate counts once, no merging; gate_counts.rz_per_rotation RZ per two-local rotation",
            "cx_count": "AND gadgets use three CX each; CCX counts as six CX",
            "degenerate_eigenvectors": "pivoted Gram-Schmidt on each degenerate cluster projector",
        },
        "spectrum_head": [float(x) for x in es.values[: max(cfg["track"] + [10]) + 1]],
        "runs": {f"{r.state}/{r.method}": r.extras for r in records},
    }
    paths = {
        "csv": out / f"{name}.csv",
        "meta": out / f"{name}.meta.json",
        "summary": out / f"{name}.summary.json",
    }
    _atomic_write(paths["csv"], csv_text(records, cfg["track"]))
    _atomic_write(paths["meta"], json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    _atomic_write(paths["summary"], json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return paths
