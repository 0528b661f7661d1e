import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, settings
from hypothesis import strategies as st

from dbqite.ite import (
    dbf_residual,
    dbf_rhs,
    energy_variance,
    integrate_dbf,
    ite_evolve,
    ite_trajectory,
    loss,
    loss_from_energy,
    loss_rate_check,
    richardson_derivative,
    riemannian_gradient,
    variance,
)
from dbqite.models import SaddleInitSpec, saddle_state, singlet_state
from dbqite.operators import projector

from oracles import random_hermitian, random_state


@given(st.integers(0, 2**32 - 1), st.floats(0, 3))
@settings(max_examples=30, deadline=None)
def test_ite_matches_expm(seed, tau):
    rng = np.random.default_rng(seed)
    h, w = random_hermitian(rng, 8), random_state(rng, 8)
    ref = sl.expm(-tau * h) @ w
    ref /= np.linalg.norm(ref)
    assert np.allclose(ite_evolve(w, h, tau), ref, atol=1e-9)


def test_large_tau_is_stable(h6):
    psi = ite_evolve(singlet_state(6), h6, 500.0)
    assert np.all(np.isfinite(psi))
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_underflow_raises():
    h = np.diag([0.0, 1.0])
    # no ground component and a decay factor below the smallest double
    with pytest.raises(FloatingPointError):
        ite_evolve(np.array([0.0, 1.0], dtype=complex), h, 1e6)


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        ite_evolve(np.array([1.0, 0.0]), np.eye(2), -1.0)


def test_variance_zero_on_eigenstates():
    h = np.diag([0.0, 1.0, 3.0])
    assert variance(np.array([0, 1.0, 0]), h) == 0.0
    e, v = energy_variance(np.array([1, 0, 1.0]) / np.sqrt(2), h)
    assert (e, v) == pytest.approx((1.5, 2.25))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_cooling_rate_property(seed):
    rng = np.random.default_rng(seed)
    h, w = random_hermitian(rng, 8), random_state(rng, 8)
    d = richardson_derivative(lambda t: energy_variance(ite_evolve(w, h, t), h)[0], 0.3, 1e-4)
    v = energy_variance(ite_evolve(w, h, 0.3), h)[1]
    assert d == pytest.approx(-2 * v, rel=1e-6)


def test_ite_solves_double_bracket_flow(rng):
    h, w = random_hermitian(rng, 8), random_state(rng, 8)
    assert dbf_residual(lambda t: ite_evolve(w, h, t), h, 0.4) < 1e-7


def test_riemannian_gradient_is_flow_generator(rng):
    h, w = random_hermitian(rng, 6), random_state(rng, 6)
    p = projector(w)
    g = riemannian_gradient(p, h)
    ph = p @ h - h @ p
    assert np.allclose(dbf_rhs(p, h), ph @ p - p @ ph)
    assert np.allclose(g, -(ph @ p - p @ ph))
    # gradient is Hermitian and traceless
    assert np.allclose(g, g.conj().T)
    assert abs(np.trace(g)) < 1e-12


def test_loss_via_energy(rng):
    h, w = random_hermitian(rng, 6), random_state(rng, 6)
    e = energy_variance(w, h)[0]
    assert loss(projector(w), h) == pytest.approx(loss_from_energy(e, h))


def test_loss_rate_along_flow(rng):
    h, w = random_hermitian(rng, 6), random_state(rng, 6)
    lhs, rhs = loss_rate_check(projector(w), h)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_integrate_dbf_stays_on_pure_states(rng):
    h, w = random_hermitian(rng, 6), random_state(rng, 6)
    a = integrate_dbf(projector(w), h, 0.3, substeps=200)
    assert np.allclose(a @ a, a, atol=1e-8)
    assert np.trace(a).real == pytest.approx(1.0, abs=1e-8)
    # projector flow and ITE agree
    assert np.allclose(a, projector(ite_evolve(w, h, 0.3)), atol=1e-7)


def test_trajectory_monotone_energy(h6):
    taus = np.linspace(0, 5, 51)
    t = ite_trajectory(singlet_state(6), h6, taus, (0, 1), keep_states=True)
    assert np.all(np.diff(t.energies) <= 1e-12)
    assert np.all(np.diff(t.fidelities[0]) >= -1e-12)
    assert len(t.states) == len(taus)
    assert t.fidelities[0][0] == pytest.approx(0.850204946963453, abs=1e-12)


def test_saddle_curves_snapshot(h10):
    taus = np.linspace(0, 20, 401)
    t2 = ite_trajectory(saddle_state(h10, SaddleInitSpec(2)), h10, taus, (0, 2))
    i = 41  # tau = 2.05
    assert t2.variances[i] == pytest.approx(0.0020735488219827403, rel=1e-6)
    assert t2.fidelities[2][i] == pytest.approx(0.9990540990340903, abs=1e-9)
    assert t2.variances.max() == pytest.approx(1.7062829187760258, rel=1e-9)
    t1 = ite_trajectory(saddle_state(h10, SaddleInitSpec(1)), h10, taus, (0,))
    assert t1.fidelities[0][-1] == pytest.approx(0.4871634833602807, abs=1e-9)


def test_ground_state_fixed_point():
    h = np.diag([-1.0, 0.5, 2.0])
    g = np.array([1.0, 0, 0], dtype=complex)
    assert np.allclose(ite_evolve(g, h, 7.0), g)
