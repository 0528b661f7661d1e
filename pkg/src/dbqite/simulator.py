"""Dense statevector execution of the circuit IR.

Amplitudes live in a ``(2,) * width + (batch,)`` view so one pass can push a
single state or a whole basis through the circuit. Qubit 0 is the most
significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Circuit, Gate, u3_matrix
from .operators import PauliSum, eigensystem, num_qubits

MAX_SIM_WIDTH = 26
MAX_UNITARY_WIDTH = 12
ANCILLA_TOL = 1e-10
NORM_CHECK_EVERY = 64

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_DIAG_PHASE = {
    "S": 1j,
    "Sdg": -1j,
    "T": np.exp(1j * np.pi / 4),
    "Tdg": np.exp(-1j * np.pi / 4),
}


class AncillaError(RuntimeError):
    """Ancillas did not return to |0> - the circuit is not a clean gadget."""


@dataclass
class SimResult:
    final_state: np.ndarray
    ancilla_residual: float


@lru_cache(maxsize=256)
def _hamexp_matrix(h: PauliSum, theta: float) -> np.ndarray:
    m = eigensystem(h).expi(theta)
    m.setflags(write=False)
    return m


def gate_matrix(g: Gate) -> np.ndarray:
    """Dense matrix of a gate on its own operands (first operand most significant)."""
    k = g.kind
    if k == "H":
        return _H.copy()
    if k == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if k in _DIAG_PHASE:
        return np.diag([1.0, _DIAG_PHASE[k]]).astype(complex)
    if k == "RZ":
        a = g.params[0]
        return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])
    if k == "PHASE":
        return np.diag([1.0, np.exp(1j * g.params[0])])
    if k == "U3":
        return u3_matrix(*g.params)
    if k == "CX":
        m = np.eye(4, dtype=complex)
        m[[2, 3]] = m[[3, 2]]
        return m
    if k == "CCX":
        m = np.eye(8, dtype=complex)
        m[[6, 7]] = m[[7, 6]]
        return m
    if k == "HAMEXP":
        return np.array(_hamexp_matrix(g.hamiltonian, g.params[0]))
    raise ValueError(f"no matrix for gate {k}")


def _sl(q: int, bit: int) -> tuple:
    return (slice(None),) * q + (bit,)


def _apply_matrix(view: np.ndarray, mat: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    k = len(qubits)
    moved = np.moveaxis(view, qubits, range(k))
    shape = moved.shape
    out = (mat @ moved.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(out, range(k), qubits)


def apply_gate(view: np.ndarray, g: Gate) -> np.ndarray:
    """Apply ``g`` to a ``(2,)*w + (batch,)`` array, in place where possible."""
    k = g.kind
    q = g.qubits
    if k in _DIAG_PHASE:
        view[_sl(q[0], 1)] *= _DIAG_PHASE[k]
    elif k == "PHASE":
        view[_sl(q[0], 1)] *= np.exp(1j * g.params[0])
    elif k == "RZ":
        a = g.params[0]
        view[_sl(q[0], 0)] *= np.exp(-0.5j * a)
        view[_sl(q[0], 1)] *= np.exp(0.5j * a)
    elif k == "X":
        lo, hi = _sl(q[0], 0), _sl(q[0], 1)
        tmp = view[lo].copy()
        view[lo] = view[hi]
        view[hi] = tmp
    elif k in ("CX", "CCX"):
        *ctrls, t = q
        idx = [slice(None)] * view.ndim
        for c in ctrls:
            idx[c] = 1
        lo, hi = list(idx), list(idx)
        lo[t], hi[t] = 0, 1
        lo, hi = tuple(lo), tuple(hi)
        tmp = view[lo].copy()
        view[lo] = view[hi]
        view[hi] = tmp
    elif k in ("H", "U3"):
        m = gate_matrix(g)
        lo, hi = _sl(q[0], 0), _sl(q[0], 1)
        a, b = view[lo].copy(), view[hi].copy()
        view[lo] = m[0, 0] * a + m[0, 1] * b
        view[hi] = m[1, 0] * a + m[1, 1] * b
    else:
        view = _apply_matrix(view, gate_matrix(g), q)
    return view


def evolve(c: Circuit, amplitudes: np.ndarray) -> np.ndarray:
    """Run ``c`` on full-width amplitudes ``(2^w,)`` or ``(2^w, batch)``."""
    amps = np.array(amplitudes, dtype=complex)
    single = amps.ndim == 1
    if single:
        amps = amps[:, None]
    if amps.shape[0] != 1 << c.width:
        raise ValueError(f"expected {1 << c.width} amplitudes, got {amps.shape[0]}")
    norms0 = np.linalg.norm(amps, axis=0)
    view = amps.reshape((2,) * c.width + (amps.shape[1],))
    for count, g in enumerate(c.gates(), 1):
        view = apply_gate(view, g)
        if count % NORM_CHECK_EVERY == 0:
            drift = np.max(np.abs(np.linalg.norm(view.reshape(-1, view.shape[-1]), axis=0) - norms0))
            if drift > 1e-10:
                raise FloatingPointError(f"norm drifted by {drift:.3g} after {count} gates")
    out = np.ascontiguousarray(view).reshape(1 << c.width, -1)
    return out[:, 0] if single else out


def run_circuit(c: Circuit, state: np.ndarray) -> SimResult:
    """Run ``c`` on ``state`` (data qubits) tensored with ancillas in ``|0>``.

    Raises ``AncillaError`` if more than ``1e-10`` of the population ends
    outside the ancilla ``|0>`` subspace.
    """
    if c.width > MAX_SIM_WIDTH:
        raise ValueError(f"simulation is capped at {MAX_SIM_WIDTH} qubits, circuit has {c.width}")
    if num_qubits(state) != c.data_qubits:
        raise ValueError(f"state has {num_qubits(state)} qubits, circuit expects {c.data_qubits} data qubits")
    anc = c.width - c.data_qubits
    full = np.zeros((len(state), 1 << anc), dtype=complex)
    full[:, 0] = state
    out = evolve(c, full.reshape(-1)).reshape(len(state), 1 << anc)
    kept = out[:, 0]
    total = np.linalg.norm(out) ** 2
    residual = float(min(1.0, max(0.0, 1.0 - np.linalg.norm(kept) ** 2 / total)))
    if residual > ANCILLA_TOL:
        raise AncillaError(f"ancilla population {residual:.3g} left outside |0>")
    return SimResult(kept / np.linalg.norm(kept), residual)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Full-width unitary, column ``j`` being the image of basis state ``j``."""
    if c.width > MAX_UNITARY_WIDTH:
        raise ValueError(f"unitary extraction is capped at {MAX_UNITARY_WIDTH} qubits")
    return evolve(c, np.eye(1 << c.width, dtype=complex))


def data_block(u: np.ndarray, c: Circuit) -> np.ndarray:
    """Block of a full-width unitary with all ancillas in and out of ``|0>``."""
    anc = c.width - c.data_qubits
    idx = np.arange(1 << c.data_qubits) << anc
    return u[np.ix_(idx, idx)]
