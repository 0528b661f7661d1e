"""Exact imaginary-time evolution and double-bracket-flow reference quantities."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .operators import (
    PauliSum,
    commutator,
    dense,
    eigensystem,
    hs_norm,
    projector,
)

VARIANCE_CLAMP = 1e-10


def ite_evolve(psi0: np.ndarray, h: PauliSum | np.ndarray, tau: float) -> np.ndarray:
    """Normalised ``exp(-tau H) psi0``.

    Weights are evaluated as ``exp(-tau (lambda_i - lambda_min))`` so large
    ``tau`` neither overflows nor underflows the dominant components.
    """
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    es = eigensystem(h)
    coeffs = es.vectors.conj().T @ psi0
    coeffs = coeffs * np.exp(-tau * (es.values - es.values[0]))
    nrm = np.linalg.norm(coeffs)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise FloatingPointError(f"imaginary-time evolution underflowed to zero at tau={tau}")
    return es.vectors @ (coeffs / nrm)


def energy(psi: np.ndarray, h: PauliSum | np.ndarray) -> float:
    return float(np.vdot(psi, dense(h) @ psi).real)


def energy_variance(psi: np.ndarray, h: PauliSum | np.ndarray) -> tuple[float, float]:
    hpsi = dense(h) @ psi
    e = float(np.vdot(psi, hpsi).real)
    v = float(np.vdot(hpsi, hpsi).real) - e * e
    if -VARIANCE_CLAMP <= v < 0:
        v = 0.0
    return e, v


def variance(psi: np.ndarray, h: PauliSum | np.ndarray) -> float:
    """``<H^2> - <H>^2``; round-off negatives down to -1e-10 are clamped to 0."""
    return energy_variance(psi, h)[1]


def riemannian_gradient(p: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``-[[P, B], P]``, the gradient of the Hilbert-Schmidt loss at ``P``."""
    return -commutator(commutator(p, b), p)


def loss(p: np.ndarray, b: np.ndarray) -> float:
    return -0.5 * hs_norm(np.asarray(p) - np.asarray(b)) ** 2


def loss_from_energy(e: float, b: np.ndarray) -> float:
    """Loss of a pure-state projector written through its energy alone."""
    return e - 0.5 * (1.0 + hs_norm(b) ** 2)


def dbf_rhs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return commutator(commutator(a, b), a)


def _central(f: Callable[[float], np.ndarray | float], t: float, dt: float):
    return (f(t + dt) - f(t - dt)) / (2 * dt)


def richardson_derivative(f: Callable[[float], np.ndarray | float], t: float, dt: float = 1e-4):
    """Central difference with one Richardson level (error ``O(dt^4)``)."""
    return (4 * _central(f, t, dt / 2) - _central(f, t, dt)) / 3


def dbf_residual(
    psi_fn: Callable[[float], np.ndarray],
    h: PauliSum | np.ndarray,
    tau: float,
    dt: float = 1e-4,
) -> float:
    """HS distance between ``dPsi/dtau`` (central difference) and ``[[Psi, H], Psi]``.

    ``psi_fn`` maps a duration to a state; projectors make the check
    insensitive to whatever global phase ``psi_fn`` attaches.
    """
    hm = dense(h)
    deriv = _central(lambda t: projector(psi_fn(t)), tau, dt)
    return hs_norm(deriv - dbf_rhs(projector(psi_fn(tau)), hm))


def integrate_dbf(a: np.ndarray, b: np.ndarray, t: float, substeps: int = 64) -> np.ndarray:
    """RK4 integration of ``dA/dt = [[A, B], A]`` from 0 to ``t`` (either sign)."""
    a = np.asarray(a, dtype=complex)
    dt = t / substeps
    for _ in range(substeps):
        k1 = dbf_rhs(a, b)
        k2 = dbf_rhs(a + 0.5 * dt * k1, b)
        k3 = dbf_rhs(a + 0.5 * dt * k2, b)
        k4 = dbf_rhs(a + dt * k3, b)
        a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return a


def loss_rate_check(a: np.ndarray, b: np.ndarray, dt: float = 1e-4) -> tuple[float, float]:
    """Finite-difference ``dL/dt`` along the flow through ``A`` versus ``-||[A, B]||^2``.

    The flow is integrated a distance ``dt/2`` and ``dt`` either side of
    ``A`` and the slope is Richardson-extrapolated.
    """
    b = np.asarray(b)
    lhs = richardson_derivative(lambda t: loss(integrate_dbf(a, b, t, substeps=4), b), 0.0, dt)
    rhs = -hs_norm(commutator(a, b)) ** 2
    return float(lhs), float(rhs)


@dataclass
class ITETrajectory:
    taus: np.ndarray
    energies: np.ndarray
    variances: np.ndarray
    fidelities: dict[int, np.ndarray]
    states: list[np.ndarray] = field(default_factory=list, repr=False)


def ite_trajectory(
    psi0: np.ndarray,
    h: PauliSum | np.ndarray,
    taus: Sequence[float],
    track: Sequence[int] = (0, 1),
    keep_states: bool = False,
) -> ITETrajectory:
    es = eigensystem(h)
    taus = np.asarray(taus, dtype=float)
    energies, variances, states = [], [], []
    fids: dict[int, list[float]] = {j: [] for j in track}
    for tau in taus:
        psi = ite_evolve(psi0, h, tau)
        e, v = energy_variance(psi, h)
        energies.append(e)
        variances.append(v)
        overlaps = np.abs(es.vectors[:, list(track)].conj().T @ psi) ** 2
        for j, f in zip(track, overlaps):
            fids[j].append(min(1.0, float(f)))
        if keep_states:
            states.append(psi)
    return ITETrajectory(
        taus,
        np.array(energies),
        np.array(variances),
        {j: np.array(f) for j, f in fids.items()},
        states,
    )
