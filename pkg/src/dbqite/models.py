"""Hamiltonians and initial states for the Heisenberg experiments."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .operators import PauliSum, eigensystem, read_state

BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class HeisenbergParams:
    L: int
    J: float = 1.0
    B: float = 0.5
    # Open boundaries reproduce the reported singlet/ground overlap of 0.68;
    # the periodic ring gives 0.42.
    boundary: str = "open"

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"need L >= 2 sites, got {self.L}")
        if not (np.isfinite(self.J) and np.isfinite(self.B)):
            raise ValueError("J and B must be finite")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")


@dataclass(frozen=True)
class SaddleInitSpec:
    k: int
    high_index: int = 10
    ground_weight: float = 1e-6

    def __post_init__(self):
        if not 0 < self.k < self.high_index:
            raise ValueError(f"need 0 < k < high_index, got k={self.k}, high_index={self.high_index}")
        if self.ground_weight < 0:
            raise ValueError("ground_weight must be non-negative")


def _site_term(L: int, sites: dict[int, str]) -> str:
    return "".join(sites.get(i, "I") for i in range(L))


def build_heisenberg(p: HeisenbergParams) -> PauliSum:
    """``J sum_i (XX + YY + ZZ)_{i,i+1} + B sum_i Z_i``.

    Periodic boundaries add the bond (L-1, 0); for ``L = 2`` that bond
    coincides with (0, 1) and the coefficients merge to ``2J``.
    """
    L = p.L
    nbonds = L if p.boundary == "periodic" else L - 1
    terms = []
    for i in range(nbonds):
        j = (i + 1) % L
        for axis in "XYZ":
            terms.append((_site_term(L, {i: axis, j: axis}), p.J))
    for i in range(L):
        terms.append((_site_term(L, {i: "Z"}), p.B))
    return PauliSum.from_terms(L, terms)


def singlet_state(L: int) -> np.ndarray:
    """Product of ``(|10> - |01>)/sqrt(2)`` on consecutive site pairs."""
    if L < 2 or L % 2:
        raise ValueError(f"singlet product needs an even site count, got {L}")
    pair = np.array([0.0, -1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0)
    psi = np.ones(1, dtype=complex)
    for _ in range(L // 2):
        psi = np.kron(psi, pair)
    return psi


def saddle_state(h: PauliSum, spec: SaddleInitSpec) -> np.ndarray:
    """``(|l_hi> + 0.5 |l_k> + sqrt(F0) |l_0>) / sqrt(1.25 + F0)`` in the eigenbasis of ``h``."""
    es = eigensystem(h)
    if spec.high_index >= len(es.values):
        raise ValueError(f"eigen-index {spec.high_index} out of range for dimension {len(es.values)}")
    v = es.vectors
    f0 = spec.ground_weight
    psi = v[:, spec.high_index] + 0.5 * v[:, spec.k] + np.sqrt(f0) * v[:, 0]
    return psi / np.sqrt(1.25 + f0)


def load_state(path: str | Path) -> np.ndarray:
    return read_state(path)
