"""Circuit IR: gates, nested sub-circuit calls, text format and structural metrics.

Sub-circuits are shared by reference (``Call``), so the exponentially large
DB-QITE recursions stay small in memory and every metric is computed once
per distinct block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from .operators import PauliSum

ONE_QUBIT = {"H", "S", "Sdg", "T", "Tdg", "X", "RZ", "U3", "PHASE"}
ARITY = {**{k: 1 for k in ONE_QUBIT}, "CX": 2, "CCX": 3}
N_PARAMS = {"RZ": 1, "PHASE": 1, "U3": 3, "HAMEXP": 1}
SELF_INVERSE = {"H", "X", "CX", "CCX"}
DAGGER = {"S": "Sdg", "Sdg": "S", "T": "Tdg", "Tdg": "T"}
KINDS = set(ARITY) | {"HAMEXP"}


@dataclass(frozen=True)
class Gate:
    """A primitive gate.

    ``HAMEXP`` is the opaque exact evolution ``exp(i angle H)`` on its
    qubits, with ``H`` carried in ``hamiltonian``; it exists for simulation
    and is not a hardware gate.
    """

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    hamiltonian: PauliSum | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind}: repeated operand in {self.qubits}")
        if self.kind == "HAMEXP":
            if self.hamiltonian is None or self.hamiltonian.n != len(self.qubits):
                raise ValueError("HAMEXP needs a Hamiltonian matching its qubit count")
        elif len(self.qubits) != ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {ARITY[self.kind]} qubits, got {len(self.qubits)}")
        if len(self.params) != N_PARAMS.get(self.kind, 0):
            raise ValueError(f"{self.kind} takes {N_PARAMS.get(self.kind, 0)} parameters")

    def inverse(self) -> "Gate":
        k = self.kind
        if k in SELF_INVERSE:
            return self
        if k in DAGGER:
            return Gate(DAGGER[k], self.qubits)
        if k == "U3":
            theta, phi, lam = self.params
            return Gate("U3", self.qubits, (-theta, -lam, -phi))
        return Gate(k, self.qubits, (-self.params[0],), self.hamiltonian)


@dataclass(frozen=True)
class Call:
    """Insert ``body`` (or its inverse) on the same qubit indices."""

    body: "Circuit"
    inverse: bool = False

    def inverted(self) -> "Call":
        return Call(self.body, not self.inverse)


Op = Union[Gate, Call]


@dataclass(frozen=True, eq=False)
class Circuit:
    width: int
    data_qubits: int
    ops: tuple[Op, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.data_qubits <= self.width:
            raise ValueError("data_qubits must lie in [0, width]")
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if isinstance(op, Call):
                if op.body.width > self.width:
                    raise ValueError(f"sub-circuit of width {op.body.width} exceeds width {self.width}")
            elif max(op.qubits) >= self.width or min(op.qubits) < 0:
                raise ValueError(f"{op.kind} on {op.qubits} outside width {self.width}")

    @property
    def ancillas(self) -> int:
        return self.width - self.data_qubits

    def gates(self, inverse: bool = False) -> Iterator[Gate]:
        """Flattened gate sequence in execution order."""
        ops = reversed(self.ops) if inverse else self.ops
        for op in ops:
            if isinstance(op, Call):
                yield from op.body.gates(op.inverse != inverse)
            else:
                yield op.inverse() if inverse else op

    def inverse(self) -> "Circuit":
        ops = tuple(op.inverted() if isinstance(op, Call) else op.inverse() for op in reversed(self.ops))
        return Circuit(self.width, self.data_qubits, ops, dict(self.metadata))

    def flattened(self) -> "Circuit":
        return Circuit(self.width, self.data_qubits, tuple(self.gates()), dict(self.metadata))

    def __repr__(self) -> str:
        return f"Circuit(width={self.width}, data_qubits={self.data_qubits}, ops={len(self.ops)})"


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateMetrics:
    u3_count: int = 0
    cx_count: int = 0
    depth: int = 0
    u0_queries: int = 0
    gate_count: int = 0
    opaque_count: int = 0

    def as_dict(self) -> dict:
        return {
            "u3_count": self.u3_count,
            "cx_count": self.cx_count,
            "depth": self.depth,
            "u0_queries": self.u0_queries,
            "gate_count": self.gate_count,
            "opaque_count": self.opaque_count,
        }


@dataclass
class _Summary:
    u3: int
    cx: int
    gates: int
    opaque: int
    u0: int
    # paths[p, q]: longest gate chain entering on wire p and leaving on wire q
    # (max-plus transfer matrix, -inf if unconnected).
    paths: np.ndarray


def _identity_paths(width: int) -> np.ndarray:
    m = np.full((width, width), -np.inf)
    np.fill_diagonal(m, 0.0)
    return m


def _maxplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.max(a[:, :, None] + b[None, :, :], axis=1)


def _summarise(c: Circuit, ccx_cost: int, extra_rz: int, memo: dict) -> _Summary:
    key = id(c)
    if key in memo:
        return memo[key][1]
    u3 = cx = gates = opaque = 0
    # counting convention only: fused two-local rotations charged extra RZs
    u3 += extra_rz * int(c.metadata.get("two_local_rotations", 0))
    u0 = 1 if c.metadata.get("role") == "u0" else 0
    paths = _identity_paths(c.width)
    for op in c.ops:
        if isinstance(op, Call):
            sub = _summarise(op.body, ccx_cost, extra_rz, memo)
            u3 += sub.u3
            cx += sub.cx
            gates += sub.gates
            opaque += sub.opaque
            u0 += sub.u0
            w = op.body.width
            sub_paths = sub.paths.T if op.inverse else sub.paths
            block = _identity_paths(c.width)
            block[:w, :w] = sub_paths
            paths = _maxplus(paths, block)
            continue
        gates += 1
        if op.kind in ONE_QUBIT:
            u3 += 1
        elif op.kind == "CX":
            cx += 1
        elif op.kind == "CCX":
            cx += ccx_cost
        else:
            opaque += 1
        q = list(op.qubits)
        front = paths[:, q].max(axis=1) + 1.0
        paths[:, q] = front[:, None]
    summary = _Summary(u3, cx, gates, opaque, u0, paths)
    # keep c alive so its id is not reused while memo lives
    memo[key] = (c, summary)
    return summary


def metrics(c: Circuit, *, ccx_cost: int = 6, rz_per_rotation: int = 1) -> GateMetrics:
    """Structural gate counts and depth.

    Every single-qubit gate counts as one U3 and a CCX as ``ccx_cost`` CX.
    Two-local Pauli rotations are emitted with one RZ; ``rz_per_rotation=2``
    charges a second one per rotation in ``u3_count`` (depth is unaffected).
    Depth is the greedy earliest-slot schedule of the flattened circuit,
    evaluated blockwise.  ``u0_queries`` counts sub-circuits tagged with
    ``metadata["role"] == "u0"`` (a bare tagged circuit counts once), falling
    back to ``metadata["u0_queries"]``.
    """
    if rz_per_rotation < 1:
        raise ValueError("rz_per_rotation must be at least 1")
    s = _summarise(c, ccx_cost, rz_per_rotation - 1, {})
    depth = int(max(s.paths.max(initial=0.0), 0.0))
    # flattened circuits (e.g. read from text) only carry the count as metadata
    u0 = s.u0 or int(c.metadata.get("u0_queries", 0))
    return GateMetrics(s.u3, s.cx, depth, u0, s.gates, s.opaque)


def measured_reflection_entangling_count(n: int) -> float:
    """Average entangling-gate count of the reflection when mid-circuit
    measurement is used for uncomputation (formula only, never simulated)."""
    return 3.5 * n - 4


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _total_rotations(c: Circuit, memo: dict) -> int:
    if id(c) not in memo:
        n = int(c.metadata.get("two_local_rotations", 0))
        n += sum(_total_rotations(op.body, memo) for op in c.ops if isinstance(op, Call))
        memo[id(c)] = n
    return memo[id(c)]


def dumps(c: Circuit) -> str:
    """One gate per line, ``KIND q0 [q1 ..] [params ..]``, after ``key=value`` headers.

    A Hamiltonian used by ``HAMEXP`` gates is written as ``term <coeff> <letters>``
    header lines; only one distinct Hamiltonian per file is supported.
    """
    lines = [f"width={c.width}", f"data={c.data_qubits}"]
    for key in ("u0_queries", "formula", "mode", "k"):
        if key in c.metadata:
            lines.append(f"{key}={c.metadata[key]}")
    rotations = _total_rotations(c, {})
    if rotations:
        lines.append(f"two_local_rotations={rotations}")
    ham: PauliSum | None = None
    body = []
    for g in c.gates():
        if g.kind == "HAMEXP":
            if ham is None:
                ham = g.hamiltonian
            elif g.hamiltonian != ham:
                raise ValueError("text format supports a single HAMEXP Hamiltonian")
        body.append(" ".join([g.kind, *map(str, g.qubits), *map(_fmt, g.params)]))
    if ham is not None:
        lines += [f"term {float(t.coeff)!r} {t.letters}" for t in ham.terms]
    return "\n".join(lines + body) + "\n"


def loads(text: str) -> Circuit:
    header: dict[str, str] = {}
    terms: list[tuple[str, float]] = []
    raw_gates: list[list[str]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and not raw_gates:
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
            continue
        parts = line.split()
        if parts[0] == "term":
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'term <coeff> <letters>'")
            terms.append((parts[2], float(parts[1])))
            continue
        raw_gates.append(parts + [str(lineno)])
    if "width" not in header or "data" not in header:
        raise ValueError("circuit text needs 'width=' and 'data=' headers")
    ham = PauliSum.from_terms(len(terms[0][0]), terms) if terms else None
    gates = []
    for parts in raw_gates:
        lineno = parts.pop()
        kind = parts[0]
        if kind not in KINDS:
            raise ValueError(f"line {lineno}: unknown gate {kind!r}")
        if kind == "HAMEXP":
            if ham is None:
                raise ValueError(f"line {lineno}: HAMEXP without 'term' header lines")
            nq = ham.n
        else:
            nq = ARITY[kind]
        np_ = N_PARAMS.get(kind, 0)
        if len(parts) != 1 + nq + np_:
            raise ValueError(f"line {lineno}: {kind} expects {nq} qubits and {np_} parameters")
        qubits = tuple(int(x) for x in parts[1 : 1 + nq])
        params = tuple(float(x) for x in parts[1 + nq :])
        gates.append(Gate(kind, qubits, params, ham if kind == "HAMEXP" else None))
    meta: dict = {k: v for k, v in header.items() if k not in ("width", "data")}
    for key in ("u0_queries", "two_local_rotations"):
        if key in meta:
            meta[key] = int(meta[key])
    return Circuit(int(header["width"]), int(header["data"]), tuple(gates), meta)


def write_circuit(c: Circuit, path: str | Path) -> None:
    Path(path).write_text(dumps(c))


def read_circuit(path: str | Path) -> Circuit:
    return loads(Path(path).read_text())


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )
