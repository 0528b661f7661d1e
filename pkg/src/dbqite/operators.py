"""Pauli-string algebra, dense Hermitian linear algebra and state helpers.

Qubit ``0`` (site 1) is the most significant bit of an amplitude index, so
``letters[0]`` acts on the leftmost tensor factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

MAX_DENSE_QUBITS = 14
PAULI_LETTERS = frozenset("IXYZ")
DEGENERACY_GAP = 1e-9


class CapacityError(ValueError):
    """Raised when a dense representation would exceed the qubit cap."""


class PauliString(NamedTuple):
    letters: str
    coeff: float

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.letters) if p != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def pattern(self) -> str:
        """Non-identity letters in site order, e.g. ``"XX"`` for ``IXXI``."""
        return "".join(p for p in self.letters if p != "I")


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli strings on ``n`` qubits.

    Build instances with :meth:`from_terms`, which validates letters and
    merges duplicate strings; the raw constructor trusts its input.
    """

    n: int
    terms: tuple[PauliString, ...]

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[str, float]]) -> "PauliSum":
        merged: dict[str, float] = {}
        for letters, coeff in terms:
            letters = letters.upper()
            if len(letters) != n:
                raise ValueError(f"Pauli string {letters!r} has length {len(letters)}, expected {n}")
            if not set(letters) <= PAULI_LETTERS:
                raise ValueError(f"invalid Pauli letters in {letters!r}")
            coeff = float(np.real_if_close(coeff))
            if not np.isfinite(coeff):
                raise ValueError(f"non-finite coefficient for {letters!r}")
            merged[letters] = merged.get(letters, 0.0) + coeff
        return cls(n, tuple(PauliString(p, c) for p, c in merged.items()))

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        return PauliSum.from_terms(self.n, list(self.terms) + list(other.terms))

    def __mul__(self, scalar: float) -> "PauliSum":
        return PauliSum(self.n, tuple(PauliString(t.letters, t.coeff * scalar) for t in self.terms))

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def max_weight(self) -> int:
        return max((t.weight for t in self.terms), default=0)

    def to_text(self) -> str:
        return "".join(f"{float(t.coeff)!r} {t.letters}\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        terms = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<coeff> <letters>', got {line!r}")
            try:
                coeff = float(parts[0])
            except ValueError:
                raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
            terms.append((parts[1], coeff))
        if not terms:
            raise ValueError("no Pauli terms found")
        n = len(terms[0][0])
        return cls.from_terms(n, terms)


def read_pauli(path: str | Path) -> PauliSum:
    return PauliSum.from_text(Path(path).read_text())


def write_pauli(h: PauliSum, path: str | Path) -> None:
    Path(path).write_text(h.to_text())


def _check_capacity(n: int) -> None:
    if n > MAX_DENSE_QUBITS:
        raise CapacityError(f"dense operators are capped at {MAX_DENSE_QUBITS} qubits, got {n}")


def _masks(letters: str) -> tuple[int, int, int]:
    n = len(letters)
    xmask = zmask = 0
    for i, p in enumerate(letters):
        bit = 1 << (n - 1 - i)
        if p in "XY":
            xmask |= bit
        if p in "ZY":
            zmask |= bit
    return xmask, zmask, letters.count("Y")


def to_dense(h: PauliSum) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of ``h``.

    Each string acts as ``P|x> = i^{#Y} (-1)^{|x & zmask|} |x ^ xmask>``.
    """
    _check_capacity(h.n)
    dim = 1 << h.n
    x = np.arange(dim, dtype=np.int64)
    m = np.zeros((dim, dim), dtype=complex)
    for t in h.terms:
        xmask, zmask, ny = _masks(t.letters)
        sign = 1 - 2 * (np.bitwise_count(x & zmask) & 1).astype(np.int64)
        m[x ^ xmask, x] += t.coeff * (1j**ny) * sign
    return m


@lru_cache(maxsize=32)
def _cached_dense(h: PauliSum) -> np.ndarray:
    m = to_dense(h)
    m.setflags(write=False)
    return m


def dense(h: PauliSum | np.ndarray) -> np.ndarray:
    """Dense matrix for ``h``, cached for PauliSums (read-only result)."""
    if isinstance(h, PauliSum):
        return _cached_dense(h)
    return np.asarray(h)


def is_hermitian(m: np.ndarray, atol: float = 1e-12) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) < atol)


def _require_hermitian(m: np.ndarray) -> None:
    if not is_hermitian(m, atol=1e-12 * max(1.0, float(np.max(np.abs(m), initial=0.0)))):
        raise ValueError("operator is not Hermitian")


class EigenSystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray

    def expi(self, theta: float) -> np.ndarray:
        """Dense ``exp(i theta M)``."""
        v = self.vectors
        return (v * np.exp(1j * theta * self.values)) @ v.conj().T

    def apply_expi(self, theta: float, psi: np.ndarray) -> np.ndarray:
        """``exp(i theta M) psi`` without forming the dense exponential."""
        v = self.vectors
        return v @ (np.exp(1j * theta * self.values) * (v.conj().T @ psi))


def _canonical_basis(block: np.ndarray) -> np.ndarray:
    # Pivoted Gram-Schmidt on the columns of the cluster projector V V^dag,
    # carried out on their coefficients V^dag e_j.  The projector does not
    # depend on the solver's basis, so the result is reproducible.
    coeffs = block.conj().T.copy()
    out = np.empty_like(block)
    for j in range(block.shape[1]):
        norms = np.linalg.norm(coeffs, axis=0)
        pivot = int(np.flatnonzero(norms >= norms.max() * (1 - 1e-8))[0])
        c = coeffs[:, pivot] / norms[pivot]
        vec = block @ c
        phase = abs(vec[pivot]) / vec[pivot]
        out[:, j] = vec * phase
        coeffs = coeffs - np.outer(c, c.conj() @ coeffs)
    return out


def eigh(m: np.ndarray) -> EigenSystem:
    """Ascending eigensystem with a reproducible basis in degenerate clusters.

    Within a cluster (consecutive gaps below ``DEGENERACY_GAP``) the basis is
    rebuilt from the cluster projector by pivoted Gram-Schmidt; each vector
    has its pivot amplitude real positive and pivots come out in descending
    magnitude.  Non-degenerate vectors get their first amplitude of maximal
    magnitude made real positive.
    """
    m = np.asarray(m)
    _require_hermitian(m)
    if np.iscomplexobj(m) and not np.any(m.imag):
        m = m.real
    values, vectors = np.linalg.eigh(m)
    vectors = vectors.astype(complex)
    start = 0
    dim = len(values)
    while start < dim:
        stop = start + 1
        while stop < dim and values[stop] - values[stop - 1] < DEGENERACY_GAP:
            stop += 1
        if stop - start > 1:
            vectors[:, start:stop] = _canonical_basis(vectors[:, start:stop])
        else:
            col = vectors[:, start]
            mags = np.abs(col)
            pivot = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-8))[0])
            vectors[:, start] = col * (mags[pivot] / col[pivot])
        start = stop
    return EigenSystem(values, vectors)


@lru_cache(maxsize=32)
def _cached_eigh(h: PauliSum) -> EigenSystem:
    es = eigh(_cached_dense(h))
    es.values.setflags(write=False)
    es.vectors.setflags(write=False)
    return es


def eigensystem(h: PauliSum | np.ndarray) -> EigenSystem:
    """Eigensystem of ``h``; cached when ``h`` is a PauliSum."""
    if isinstance(h, PauliSum):
        return _cached_eigh(h)
    return eigh(h)


def exp_unitary(m: np.ndarray, theta: float) -> np.ndarray:
    """``exp(i theta M)`` for Hermitian ``M`` via its eigendecomposition."""
    return eigh(m).expi(theta)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def hs_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(m), "fro"))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())


def num_qubits(psi: np.ndarray) -> int:
    dim = len(psi)
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"state length {dim} is not a power of two")
    return n


def normalized(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("cannot normalise the zero vector")
    return psi / nrm


def basis_state(n: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_phi ||e^{i phi} a - b||``.

    Aligns the phase explicitly; ``sqrt(2 - 2|<a|b>|)`` would lose half the
    digits to cancellation once the distance drops below ~1e-8.
    """
    a, b = np.asarray(a), np.asarray(b)
    ov = np.vdot(a, b)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(phase * a - b))


def write_state(psi: np.ndarray, path: str | Path) -> None:
    n = num_qubits(psi)
    lines = [f"n={n}"]
    lines += [f"{float(z.real)!r} {float(z.imag)!r}" for z in np.asarray(psi, dtype=complex)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_state(path: str | Path, *, tol: float = 1e-6) -> np.ndarray:
    """Read a statevector file; renormalise within ``tol`` of unit norm."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ValueError(f"{path}: missing 'n=<int>' header")
    try:
        n = int(lines[0][2:])
    except ValueError:
        raise ValueError(f"{path}: bad header {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != 1 << n:
        raise ValueError(f"{path}: expected {1 << n} amplitude lines, found {len(body)}")
    amps = np.empty(1 << n, dtype=complex)
    for i, line in enumerate(body):
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: amplitude line {i + 2} must be '<re> <im>'")
        amps[i] = complex(float(parts[0]), float(parts[1]))
    nrm = np.linalg.norm(amps)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"{path}: state norm {nrm:.8g} deviates from 1 by more than {tol:g}")
    return amps / nrm
