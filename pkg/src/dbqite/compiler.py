"""Gate-level synthesis of DB-QITE circuits.

Hamiltonian exponentials are compiled with a Strang (second-order) Trotter
formula over coloured layers of two-local Pauli rotations. The reflection
``exp(i theta |0..0><0..0|)`` computes an AND of the negated data qubits
into an ancilla tree, applies one PHASE gate and uncomputes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import Call, Circuit, Gate
from .engine import GOLDEN, StepConfig, rescaled_angles
from .operators import PauliSum, PauliString

MODES = ("trotter", "exact")


# ---------------------------------------------------------------------------
# layering
# ---------------------------------------------------------------------------


def color_layers(h: PauliSum) -> list[list[int]]:
    """Partition term indices into layers of pairwise disjoint support.

    Terms are grouped by letter pattern (``XX``, ``YY``, ``Z``, ...) in order
    of first appearance, and each group is coloured greedily, largest
    conflict degree first with ties broken by term index.
    """
    groups: dict[str, list[int]] = {}
    for idx, t in enumerate(h.terms):
        if t.weight:
            groups.setdefault(t.pattern, []).append(idx)
    layers: list[list[int]] = []
    for members in groups.values():
        supports = {i: set(h.terms[i].support) for i in members}
        conflicts = {i: {j for j in members if j != i and supports[i] & supports[j]} for i in members}
        order = sorted(members, key=lambda i: (-len(conflicts[i]), i))
        colour: dict[int, int] = {}
        for i in order:
            used = {colour[j] for j in conflicts[i] if j in colour}
            colour[i] = next(c for c in range(len(members) + 1) if c not in used)
        ncol = max(colour.values()) + 1
        layers.extend(sorted(i for i in members if colour[i] == c) for c in range(ncol))
    return layers


def layers_valid(h: PauliSum, layers: Sequence[Sequence[int]]) -> bool:
    for layer in layers:
        seen: set[int] = set()
        for i in layer:
            sup = set(h.terms[i].support)
            if sup & seen:
                return False
            seen |= sup
    return True


# ---------------------------------------------------------------------------
# Pauli rotations and Trotter
# ---------------------------------------------------------------------------

_TO_Z = {"X": [("H",)], "Y": [("Sdg",), ("H",)], "Z": []}
_FROM_Z = {"X": [("H",)], "Y": [("H",), ("S",)], "Z": []}


def pauli_rotation(term: PauliString, theta: float) -> list[Gate]:
    """Gates for ``exp(i theta c P)`` with ``P`` of weight one or two.

    Basis changes map each letter to Z, a CX pair computes the parity onto
    the last qubit and ``RZ(-2 theta c)`` applies the phase.
    """
    sup = term.support
    if len(sup) > 2:
        raise ValueError(f"term {term.letters} has weight {len(sup)}; only two-local terms are supported")
    if not sup:
        return []
    gates: list[Gate] = []
    for q in sup:
        gates += [Gate(k, (q,)) for (k,) in _TO_Z[term.letters[q]]]
    angle = -2.0 * theta * term.coeff
    if len(sup) == 1:
        gates.append(Gate("RZ", sup, (angle,)))
    else:
        a, b = sup
        gates += [Gate("CX", (a, b)), Gate("RZ", (b,), (angle,)), Gate("CX", (a, b))]
    for q in sup:
        gates += [Gate(k, (q,)) for (k,) in _FROM_Z[term.letters[q]]]
    return gates


def compile_trotter(h: PauliSum, theta: float, steps: int = 2, order: int = 2) -> Circuit:
    """Product-formula circuit for ``exp(i theta H)``.

    ``order=2`` sweeps the layers forward with half angles and back again
    (the middle layer is merged into one full-angle pass); ``order=1`` is a
    single forward sweep per step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if h.max_weight > 2:
        raise ValueError("only two-local Hamiltonians are supported")
    layers = color_layers(h)
    dt = theta / steps
    sweep: list[tuple[list[int], float]]
    if order == 1:
        sweep = [(layer, dt) for layer in layers]
    else:
        half = [(layer, dt / 2) for layer in layers[:-1]]
        sweep = half + [(layers[-1], dt)] + half[::-1] if layers else []
    gates: list[Gate] = []
    pairs = 0
    for _ in range(steps):
        for layer, angle in sweep:
            for i in layer:
                gates += pauli_rotation(h.terms[i], angle)
                pairs += h.terms[i].weight == 2
    meta = {
        "kind": "trotter",
        "theta": theta,
        "steps": steps,
        "order": order,
        "layers": len(layers),
        "two_local_rotations": pairs,
    }
    return Circuit(h.n, h.n, tuple(gates), meta)


def compile_exact_evolution(h: PauliSum, theta: float) -> Circuit:
    """Single opaque ``HAMEXP`` gate; only meaningful for simulation."""
    gate = Gate("HAMEXP", tuple(range(h.n)), (theta,), h)
    return Circuit(h.n, h.n, (gate,), {"kind": "exact", "theta": theta})


# ---------------------------------------------------------------------------
# reflection
# ---------------------------------------------------------------------------


def relative_phase_toffoli(c1: int, c2: int, target: int) -> list[Gate]:
    """Three-CX Toffoli up to a diagonal phase (a monomial unitary).

    Computing and later uncomputing with the inverse cancels the phase
    whenever the gates in between are diagonal.
    """
    return [
        Gate("H", (target,)),
        Gate("T", (target,)),
        Gate("CX", (c2, target)),
        Gate("Tdg", (target,)),
        Gate("CX", (c1, target)),
        Gate("T", (target,)),
        Gate("CX", (c2, target)),
        Gate("Tdg", (target,)),
        Gate("H", (target,)),
    ]


def reflection_width(n: int) -> int:
    return n + max(n - 1, 0)


def compile_reflection(n: int, theta: float, *, width: int | None = None, and_gadget: str = "rccx") -> Circuit:
    """``exp(i theta |0..0><0..0|)`` on ``n`` data qubits, exactly (no stray global phase).

    Ancillas ``n .. 2n-2`` hold a balanced AND tree of the flipped data
    qubits. With the default three-CX AND gadget the circuit has exactly
    ``6n - 6`` CX gates; ``and_gadget="ccx"`` emits plain CCX gates instead.
    """
    if n < 1:
        raise ValueError("need at least one data qubit")
    if and_gadget not in ("rccx", "ccx"):
        raise ValueError("and_gadget must be 'rccx' or 'ccx'")
    width = reflection_width(n) if width is None else width
    if width < reflection_width(n):
        raise ValueError(f"reflection on {n} qubits needs width {reflection_width(n)}")
    flips = [Gate("X", (q,)) for q in range(n)]
    compute: list[Gate] = []
    wires = list(range(n))
    next_anc = n
    while len(wires) > 1:
        merged = []
        for a, b in zip(wires[::2], wires[1::2]):
            if and_gadget == "rccx":
                compute += relative_phase_toffoli(a, b, next_anc)
            else:
                compute.append(Gate("CCX", (a, b, next_anc)))
            merged.append(next_anc)
            next_anc += 1
        if len(wires) % 2:
            merged.append(wires[-1])
        wires = merged
    root = wires[0]
    uncompute = [g.inverse() for g in reversed(compute)]
    gates = flips + compute + [Gate("PHASE", (root,), (theta,))] + uncompute + flips
    return Circuit(width, n, tuple(gates), {"kind": "reflection", "theta": theta, "and_gadget": and_gadget})


# ---------------------------------------------------------------------------
# DB-QITE recursion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompileConfig:
    formula: str = "gc"
    mode: str = "trotter"
    trotter_steps: int = 2
    trotter_order: int = 2
    alpha: float = 10.0
    beta: float = 1.0
    alpha_slot: str = "hamiltonian"
    and_gadget: str = "rccx"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.formula not in ("gc", "hopf"):
            raise ValueError("formula must be 'gc' or 'hopf'")

    @classmethod
    def from_step_config(cls, cfg: StepConfig, **kw) -> "CompileConfig":
        return cls(formula=cfg.formula, alpha=cfg.alpha, beta=cfg.beta, alpha_slot=cfg.alpha_slot, **kw)


class _Blocks:
    """Memoised building blocks for one synthesis run."""

    def __init__(self, h: PauliSum, width: int, cfg: CompileConfig):
        self.h, self.width, self.cfg = h, width, cfg
        self._evo: dict[float, Circuit] = {}
        self._refl: dict[float, Circuit] = {}

    def evolution(self, theta: float) -> Circuit:
        if theta not in self._evo:
            if self.cfg.mode == "exact":
                self._evo[theta] = compile_exact_evolution(self.h, theta)
            else:
                self._evo[theta] = compile_trotter(self.h, theta, self.cfg.trotter_steps, self.cfg.trotter_order)
        return self._evo[theta]

    def reflection(self, theta: float) -> Circuit:
        if theta not in self._refl:
            self._refl[theta] = compile_reflection(self.h.n, theta, width=self.width, and_gadget=self.cfg.and_gadget)
        return self._refl[theta]


def _validate(u0: Circuit, h: PauliSum, schedule: Sequence[float], k: int) -> None:
    if k < 0:
        raise ValueError("k must be non-negative")
    if len(schedule) < k:
        raise ValueError(f"schedule has {len(schedule)} entries but k={k} steps were requested")
    if u0.data_qubits != h.n:
        raise ValueError(f"U0 acts on {u0.data_qubits} data qubits, Hamiltonian on {h.n}")


def _synthesize(u0: Circuit, h: PauliSum, schedule: Sequence[float], k: int, cfg: CompileConfig) -> Circuit:
    _validate(u0, h, schedule, k)
    if k == 0:
        meta = {**u0.metadata, "role": "u0", "formula": cfg.formula, "mode": cfg.mode, "k": 0, "u0_queries": 1}
        return Circuit(u0.width, u0.data_qubits, u0.ops, meta)
    n = h.n
    width = max(u0.width, reflection_width(n))
    blocks = _Blocks(h, width, cfg)
    u = Circuit(width, n, (Call(u0),), {"role": "u0"})
    for j in range(k):
        th, tw = rescaled_angles(float(schedule[j]), cfg.alpha, cfg.beta, cfg.alpha_slot)
        if cfg.formula == "gc":
            # time order of U e^{iaH} U R(b) U^dag e^{-iaH} read right to left
            ops = [
                Call(u),
                Call(blocks.evolution(-th)),
                Call(u, inverse=True),
                Call(blocks.reflection(tw)),
                Call(u),
                Call(blocks.evolution(th)),
            ]
        else:
            ops = [
                Call(u),
                Call(blocks.evolution((1.0 - GOLDEN) * th)),
                Call(u, inverse=True),
                Call(blocks.reflection(-(1.0 + GOLDEN) * tw)),
                Call(u),
                Call(blocks.evolution(-th)),
                Call(u, inverse=True),
                Call(blocks.reflection(GOLDEN * tw)),
                Call(u),
                Call(blocks.evolution(GOLDEN * th)),
            ]
        u = Circuit(width, n, tuple(ops), {"level": j + 1})
    per_level = 3 if cfg.formula == "gc" else 5
    meta = {
        "formula": cfg.formula,
        "mode": cfg.mode,
        "k": k,
        "u0_queries": per_level**k,
        "schedule": [float(s) for s in schedule[:k]],
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "alpha_slot": cfg.alpha_slot,
        "trotter_steps": cfg.trotter_steps,
        "trotter_order": cfg.trotter_order,
    }
    return Circuit(width, n, u.ops, meta)


def synthesize_dbqite(u0: Circuit, h: PauliSum, schedule: Sequence[float], k: int, cfg: CompileConfig = CompileConfig()) -> Circuit:
    """``U_{j+1} = e^{i a H} U_j e^{i b |0><0|} U_j^dag e^{-i a H} U_j`` expanded ``k`` times."""
    if cfg.formula != "gc":
        cfg = CompileConfig(**{**cfg.__dict__, "formula": "gc"})
    return _synthesize(u0, h, schedule, k, cfg)


def synthesize_hopf(u0: Circuit, h: PauliSum, schedule: Sequence[float], k: int, cfg: CompileConfig = CompileConfig(formula="hopf")) -> Circuit:
    """HOPF recursion; every ``e^{i c omega_j}`` becomes ``U_j R(c) U_j^dag``."""
    if cfg.formula != "hopf":
        cfg = CompileConfig(**{**cfg.__dict__, "formula": "hopf"})
    return _synthesize(u0, h, schedule, k, cfg)


def synthesize(u0: Circuit, h: PauliSum, schedule: Sequence[float], k: int, cfg: CompileConfig) -> Circuit:
    return _synthesize(u0, h, schedule, k, cfg)


# ---------------------------------------------------------------------------
# warm-start circuits
# ---------------------------------------------------------------------------


def singlet_circuit(L: int) -> Circuit:
    """Prepares ``(|10> - |01>)/sqrt(2)`` on each consecutive pair from ``|0..0>``, phase exact."""
    if L < 2 or L % 2:
        raise ValueError("singlet preparation needs an even number of qubits")
    gates: list[Gate] = []
    for a in range(0, L, 2):
        b = a + 1
        # U3(3pi/2) gives (-|0> + |1>)/sqrt(2); X then CX entangles the partner.
        gates += [Gate("U3", (a,), (1.5 * np.pi, 0.0, 0.0)), Gate("X", (b,)), Gate("CX", (a, b))]
    return Circuit(L, L, tuple(gates), {"kind": "singlet"})
