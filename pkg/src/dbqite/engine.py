"""State-level DB-QITE recursions (group commutator and HOPF) with grid-search scheduling."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .ite import energy_variance
from .operators import PauliSum, dense, eigensystem

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
FORMULAS = ("gc", "hopf")
SPACINGS = ("linear", "geometric")
ALPHA_SLOTS = ("hamiltonian", "state")
TIE_TOL = 1e-12

Evolver = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class StepConfig:
    formula: str = "gc"
    alpha: float = 10.0
    beta: float = 1.0
    grid_points: int = 20
    grid_max: float = 1.0
    grid_spacing: str = "linear"
    # Smallest point of a geometric grid, as a fraction of grid_max.
    geometric_ratio: float = 1e-3
    # Which slot alpha divides; beta takes the other one.
    alpha_slot: str = "hamiltonian"

    def __post_init__(self):
        if self.formula not in FORMULAS:
            raise ValueError(f"formula must be one of {FORMULAS}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if self.grid_max <= 0:
            raise ValueError("grid_max must be positive")
        if self.grid_spacing not in SPACINGS:
            raise ValueError(f"grid_spacing must be one of {SPACINGS}")
        if not 0 < self.geometric_ratio < 1:
            raise ValueError("geometric_ratio must lie in (0, 1)")
        if self.alpha_slot not in ALPHA_SLOTS:
            raise ValueError(f"alpha_slot must be one of {ALPHA_SLOTS}")

    def grid(self) -> np.ndarray:
        if self.grid_spacing == "linear":
            return self.grid_max * np.arange(1, self.grid_points + 1) / self.grid_points
        return np.geomspace(self.grid_max * self.geometric_ratio, self.grid_max, self.grid_points)

    def as_dict(self) -> dict:
        return asdict(self)


def rescaled_angles(s: float, alpha: float = 1.0, beta: float = 1.0, alpha_slot: str = "hamiltonian") -> tuple[float, float]:
    """Rotation angles ``(theta_H, theta_omega)`` with ``theta_H * theta_omega = s``.

    The Hamiltonian slot gets ``sqrt(alpha beta s)/alpha`` and the state slot
    ``sqrt(alpha beta s)/beta``; ``alpha_slot="state"`` swaps the roles.
    """
    if s < 0:
        raise ValueError(f"step duration must be non-negative, got {s}")
    root = np.sqrt(alpha * beta * s)
    if alpha_slot == "hamiltonian":
        return root / alpha, root / beta
    if alpha_slot == "state":
        return root / beta, root / alpha
    raise ValueError(f"alpha_slot must be one of {ALPHA_SLOTS}")


def reflect(psi: np.ndarray, omega: np.ndarray, theta: float) -> np.ndarray:
    """``exp(i theta |omega><omega|) psi = psi + (e^{i theta} - 1) <omega|psi> omega``."""
    return psi + (np.exp(1j * theta) - 1.0) * np.vdot(omega, psi) * omega


def exact_evolver(h: PauliSum | np.ndarray) -> Evolver:
    es = eigensystem(h)
    return lambda psi, theta: es.apply_expi(theta, psi)


def trotter_evolver(h: PauliSum, steps: int = 2, order: int = 2) -> Evolver:
    """Apply the compiled Trotter circuit for ``exp(i theta H)`` to a data state."""
    from .compiler import compile_trotter
    from .simulator import run_circuit

    def evolve(psi: np.ndarray, theta: float) -> np.ndarray:
        return run_circuit(compile_trotter(h, theta, steps=steps, order=order), psi).final_state

    return evolve


def gc_step(
    omega: np.ndarray,
    h: PauliSum | np.ndarray,
    s: float,
    alpha: float = 1.0,
    beta: float = 1.0,
    *,
    alpha_slot: str = "hamiltonian",
    evolve: Evolver | None = None,
) -> np.ndarray:
    """One group-commutator step ``e^{i a H} e^{i b omega} e^{-i a H} |omega>``."""
    th, tw = rescaled_angles(s, alpha, beta, alpha_slot)
    evolve = evolve or exact_evolver(h)
    psi = evolve(omega, -th)
    psi = reflect(psi, omega, tw)
    return evolve(psi, th)


def hopf_step(
    omega: np.ndarray,
    h: PauliSum | np.ndarray,
    s: float,
    alpha: float = 1.0,
    beta: float = 1.0,
    *,
    alpha_slot: str = "hamiltonian",
    evolve: Evolver | None = None,
) -> np.ndarray:
    """One higher-order product-formula step with the golden-ratio coefficient.

    Applied right to left:
    ``e^{i phi a H} e^{i phi b omega} e^{-i a H} e^{-i(1+phi) b omega} e^{i(1-phi) a H} |omega>``.
    """
    th, tw = rescaled_angles(s, alpha, beta, alpha_slot)
    evolve = evolve or exact_evolver(h)
    psi = evolve(omega, (1.0 - GOLDEN) * th)
    psi = reflect(psi, omega, -(1.0 + GOLDEN) * tw)
    psi = evolve(psi, -th)
    psi = reflect(psi, omega, GOLDEN * tw)
    return evolve(psi, GOLDEN * th)


def dbqite_step(
    omega: np.ndarray,
    h: PauliSum | np.ndarray,
    s: float,
    cfg: StepConfig,
    evolve: Evolver | None = None,
) -> np.ndarray:
    step = gc_step if cfg.formula == "gc" else hopf_step
    psi = step(omega, h, s, cfg.alpha, cfg.beta, alpha_slot=cfg.alpha_slot, evolve=evolve)
    # every factor is unitary; this only stops rounding drift compounding over steps
    return psi / np.linalg.norm(psi)


def bracket_flow_target(omega: np.ndarray, h: PauliSum | np.ndarray, s: float) -> np.ndarray:
    """Exact ``exp(s [|omega><omega|, H]) |omega>``.

    The generator is a rotation in span{omega, H omega}, giving
    ``cos(s sqrt(V)) omega - sin(s sqrt(V)) (H - E) omega / sqrt(V)``.
    """
    hpsi = dense(h) @ omega
    e = np.vdot(omega, hpsi).real
    perp = hpsi - e * omega
    sd = np.linalg.norm(perp)
    if sd == 0.0:
        return np.array(omega, dtype=complex)
    return np.cos(s * sd) * omega - np.sin(s * sd) * perp / sd


class StepResult(NamedTuple):
    s: float
    state: np.ndarray
    energy: float
    improved: bool


def grid_search_step(
    omega: np.ndarray,
    h: PauliSum | np.ndarray,
    cfg: StepConfig,
    evolve: Evolver | None = None,
) -> StepResult:
    """Try every grid duration and keep the lowest energy (ties go to the smaller ``s``).

    ``improved`` is False when no grid point lowers the energy; the best
    point is returned regardless.
    """
    evolve = evolve or exact_evolver(h)
    e0, _ = energy_variance(omega, h)
    best: StepResult | None = None
    for s in cfg.grid():
        psi = dbqite_step(omega, h, float(s), cfg, evolve)
        e, _ = energy_variance(psi, h)
        if best is None or e < best.energy - TIE_TOL:
            best = StepResult(float(s), psi, e, False)
    return best._replace(improved=best.energy < e0 - TIE_TOL)


@dataclass
class DBQITETrajectory:
    schedule: list[float] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    variances: list[float] = field(default_factory=list)
    fidelities: dict[int, list[float]] = field(default_factory=dict)
    improved: list[bool] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def steps(self) -> int:
        return len(self.schedule)

    @property
    def cumulative_duration(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.schedule)])


def _record(traj: DBQITETrajectory, psi: np.ndarray, h, vectors: np.ndarray, track: Sequence[int], keep: bool) -> None:
    e, v = energy_variance(psi, h)
    traj.energies.append(e)
    traj.variances.append(v)
    overlaps = np.abs(vectors.conj().T @ psi) ** 2
    for j, f in zip(track, overlaps):
        traj.fidelities[j].append(min(1.0, float(f)))
    if keep:
        traj.states.append(psi)


def run_dbqite(
    omega0: np.ndarray,
    h: PauliSum | np.ndarray,
    K: int,
    cfg: StepConfig = StepConfig(),
    track: Sequence[int] = (0, 1),
    *,
    evolve: Evolver | None = None,
    keep_states: bool = True,
) -> DBQITETrajectory:
    if K < 0:
        raise ValueError("K must be non-negative")
    evolve = evolve or exact_evolver(h)
    vectors = eigensystem(h).vectors[:, list(track)]
    traj = DBQITETrajectory(fidelities={j: [] for j in track})
    omega = np.asarray(omega0, dtype=complex)
    _record(traj, omega, h, vectors, track, keep_states)
    for _ in range(K):
        res = grid_search_step(omega, h, cfg, evolve)
        omega = res.state
        traj.schedule.append(res.s)
        traj.improved.append(res.improved)
        _record(traj, omega, h, vectors, track, keep_states)
    return traj


def run_schedule(
    omega0: np.ndarray,
    h: PauliSum | np.ndarray,
    schedule: Sequence[float],
    cfg: StepConfig = StepConfig(),
    evolve: Evolver | None = None,
) -> list[np.ndarray]:
    """States ``omega_0 .. omega_K`` for a fixed schedule (no grid search)."""
    evolve = evolve or exact_evolver(h)
    states = [np.asarray(omega0, dtype=complex)]
    for s in schedule:
        states.append(dbqite_step(states[-1], h, float(s), cfg, evolve))
    return states
