"""Command-line entry point: ``dbqite <group> <command> ...``."""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import experiments
from .circuits import metrics, read_circuit, write_circuit
from .compiler import CompileConfig, singlet_circuit, synthesize
from .engine import StepConfig, run_dbqite
from .ite import ite_trajectory
from .models import HeisenbergParams, SaddleInitSpec, build_heisenberg, saddle_state, singlet_state
from .operators import read_pauli, read_state, write_pauli, write_state
from .simulator import run_circuit


def _track(spec: str) -> list[int]:
    return [int(x) for x in spec.split(",") if x.strip()]


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x) for x in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _friendly(fn):
    """Report input and numerical errors as one-line CLI errors."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, FloatingPointError, KeyError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
def main():
    """Double-bracket quantum imaginary-time evolution toolkit."""


# -- models -----------------------------------------------------------------


@main.group()
def models():
    """Build Hamiltonians and initial states."""


@models.command("heisenberg")
@click.option("--L", "L", type=int, required=True)
@click.option("--J", "J", type=float, default=1.0, show_default=True)
@click.option("--B", "B", type=float, default=0.5, show_default=True)
@click.option("--boundary", type=click.Choice(["open", "periodic"]), default="open", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def models_heisenberg(L, J, B, boundary, out):
    write_pauli(build_heisenberg(HeisenbergParams(L, J, B, boundary)), out)


@models.command("singlet")
@click.option("--L", "L", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--circuit", type=click.Path(dir_okay=False), default=None, help="also write a circuit preparing it from |0..0>")
@_friendly
def models_singlet(L, out, circuit):
    write_state(singlet_state(L), out)
    if circuit:
        write_circuit(singlet_circuit(L), circuit)


@models.command("saddle")
@click.option("--k", type=int, required=True)
@click.option("--f0", type=float, default=1e-6, show_default=True)
@click.option("--high-index", type=int, default=10, show_default=True)
@click.option("--hamiltonian", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def models_saddle(k, f0, high_index, hamiltonian, out):
    write_state(saddle_state(read_pauli(hamiltonian), SaddleInitSpec(k, high_index, f0)), out)


# -- ite --------------------------------------------------------------------


@main.group()
def ite():
    """Exact imaginary-time evolution."""


@ite.command("run")
@click.option("--hamiltonian", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--state", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--tau-max", type=float, default=20.0, show_default=True)
@click.option("--points", type=int, default=400, show_default=True)
@click.option("--track", default="0,1", show_default=True, help="comma-separated eigen-indices")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def ite_run(hamiltonian, state, tau_max, points, track, out):
    h = read_pauli(hamiltonian)
    idx = _track(track)
    traj = ite_trajectory(read_state(state), h, np.linspace(0.0, tau_max, points), idx)
    rows = [
        [float(t), float(e), float(v)] + [float(traj.fidelities[j][i]) for j in idx]
        for i, (t, e, v) in enumerate(zip(traj.taus, traj.energies, traj.variances))
    ]
    _write_csv(out, ["tau", "E", "V"] + [f"F{j}" for j in idx], rows)


# -- dbqite -----------------------------------------------------------------


@main.group("dbqite")
def dbqite_group():
    """State-level DB-QITE."""


@dbqite_group.command("run")
@click.option("--hamiltonian", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--state", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--steps", type=int, default=5, show_default=True)
@click.option("--formula", type=click.Choice(["gc", "hopf"]), default="gc", show_default=True)
@click.option("--alpha", type=float, default=10.0, show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--alpha-slot", type=click.Choice(["hamiltonian", "state"]), default="hamiltonian", show_default=True)
@click.option("--grid-points", type=int, default=20, show_default=True)
@click.option("--grid-max", type=float, default=1.0, show_default=True)
@click.option("--grid-spacing", type=click.Choice(["linear", "geometric"]), default="linear", show_default=True)
@click.option("--track", default="0,1", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def dbqite_run(hamiltonian, state, steps, formula, alpha, beta, alpha_slot, grid_points, grid_max, grid_spacing, track, out):
    h = read_pauli(hamiltonian)
    idx = _track(track)
    cfg = StepConfig(formula, alpha, beta, grid_points, grid_max, grid_spacing, alpha_slot=alpha_slot)
    traj = run_dbqite(read_state(state), h, steps, cfg, idx, keep_states=False)
    rows = []
    for k in range(traj.steps + 1):
        s = traj.schedule[k - 1] if k else 0.0
        flag = int(traj.improved[k - 1]) if k else ""
        rows.append([k, s, traj.energies[k], traj.variances[k]] + [traj.fidelities[j][k] for j in idx] + [flag])
    _write_csv(out, ["k", "s_k", "E", "V"] + [f"F{j}" for j in idx] + ["improved"], rows)


# -- compile ----------------------------------------------------------------


@main.group("compile")
def compile_group():
    """Gate-level synthesis and counting."""


def _load_schedule(path: str) -> list[float]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data["schedule"]
    return [float(x) for x in data]


@compile_group.command("dbqite")
@click.option("--hamiltonian", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--u0", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--schedule", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--k", type=int, required=True)
@click.option("--formula", type=click.Choice(["gc", "hopf"]), default="gc", show_default=True)
@click.option("--mode", type=click.Choice(["trotter", "exact"]), default="trotter", show_default=True)
@click.option("--alpha", type=float, default=10.0, show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--trotter-steps", type=int, default=2, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def compile_dbqite(hamiltonian, u0, schedule, k, formula, mode, alpha, beta, trotter_steps, out):
    cfg = CompileConfig(formula=formula, mode=mode, alpha=alpha, beta=beta, trotter_steps=trotter_steps)
    circuit = synthesize(read_circuit(u0), read_pauli(hamiltonian), _load_schedule(schedule), k, cfg)
    write_circuit(circuit, out)


@compile_group.command("counts")
@click.option("--circuit", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--rz-per-rotation", type=click.IntRange(1, 2), default=1, show_default=True,
              help="RZ gates charged per two-local rotation")
@_friendly
def compile_counts(circuit, rz_per_rotation):
    click.echo(json.dumps(metrics(read_circuit(circuit), rz_per_rotation=rz_per_rotation).as_dict(), sort_keys=True))


# -- simulate ---------------------------------------------------------------


@main.command("simulate")
@click.option("--circuit", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--state", type=click.Path(exists=True, dir_okay=False), default=None, help="data-qubit input (default |0..0>)")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def simulate(circuit, state, out):
    c = read_circuit(circuit)
    if state is None:
        psi = np.zeros(1 << c.data_qubits, dtype=complex)
        psi[0] = 1.0
    else:
        psi = read_state(state)
    res = run_circuit(c, psi)
    write_state(res.final_state, out)
    Path(out + ".json").write_text(json.dumps({"ancilla_residual": res.ancilla_residual}) + "\n")


# -- experiment -------------------------------------------------------------


@main.group()
def experiment():
    """Run declarative experiment configs."""


@experiment.command("convergence")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), required=True)
@_friendly
def experiment_convergence(config):
    cfg = experiments.load_config(config, "convergence")
    experiments.run_convergence(cfg)
    click.echo(f"wrote {Path(cfg['output_dir']).resolve() / (cfg['name'] + '.csv')}")


@experiment.command("saddle")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), required=True)
@_friendly
def experiment_saddle(config):
    cfg = experiments.load_config(config, "saddle")
    experiments.run_saddle(cfg)
    click.echo(f"wrote {Path(cfg['output_dir']).resolve() / (cfg['name'] + '.csv')}")


if __name__ == "__main__":
    sys.exit(main())
