import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbqite.operators import (
    CapacityError,
    PauliSum,
    commutator,
    dense,
    eigensystem,
    eigh,
    exp_unitary,
    fidelity,
    phase_distance,
    read_pauli,
    read_state,
    to_dense,
    write_pauli,
    write_state,
)

from oracles import expm_taylor, heisenberg_kron, kron_dense, loop_commutator, power_ground, random_hermitian

letters = st.text(alphabet="IXYZ", min_size=3, max_size=3)
coeffs = st.floats(min_value=-3, max_value=3, allow_nan=False)
pauli_sums = st.lists(st.tuples(letters, coeffs), min_size=1, max_size=6).map(lambda t: PauliSum.from_terms(3, t))


# -- PauliSum ---------------------------------------------------------------


def test_duplicates_merge():
    h = PauliSum.from_terms(2, [("XX", 1.0), ("ZZ", 0.5), ("XX", 2.0)])
    assert len(h) == 2
    assert dict((t.letters, t.coeff) for t in h.terms) == {"XX": 3.0, "ZZ": 0.5}


def test_bad_strings_rejected():
    with pytest.raises(ValueError):
        PauliSum.from_terms(2, [("XA", 1.0)])
    with pytest.raises(ValueError):
        PauliSum.from_terms(2, [("XXX", 1.0)])
    with pytest.raises(ValueError):
        PauliSum.from_terms(2, [("XX", float("nan"))])


def test_text_roundtrip(tmp_path):
    h = PauliSum.from_terms(3, [("XYZ", 0.1), ("IIZ", -2.5), ("ZZI", 1 / 3)])
    write_pauli(h, tmp_path / "h.txt")
    assert read_pauli(tmp_path / "h.txt") == h


def test_text_comments_and_errors():
    h = PauliSum.from_text("# header\n1.5 XI  # trailing\n\n-1 IZ\n")
    assert len(h) == 2
    with pytest.raises(ValueError, match="line 1"):
        PauliSum.from_text("abc XI\n")
    with pytest.raises(ValueError):
        PauliSum.from_text("# nothing\n")


def test_support_weight_pattern():
    t = PauliSum.from_terms(4, [("IXYI", 1.0)]).terms[0]
    assert t.support == (1, 2)
    assert t.weight == 2
    assert t.pattern == "XY"


# -- dense ------------------------------------------------------------------


@given(pauli_sums)
@settings(max_examples=60, deadline=None)
def test_to_dense_matches_kronecker(h):
    ref = kron_dense([(t.coeff, t.letters) for t in h.terms])
    assert np.allclose(to_dense(h), ref, atol=1e-12)


def test_qubit0_is_most_significant():
    z0 = to_dense(PauliSum.from_terms(2, [("ZI", 1.0)]))
    assert np.allclose(np.diag(z0), [1, 1, -1, -1])


def test_y_phase():
    y = to_dense(PauliSum.from_terms(1, [("Y", 1.0)]))
    assert np.allclose(y, [[0, -1j], [1j, 0]])


def test_capacity_guard():
    with pytest.raises(CapacityError):
        to_dense(PauliSum.from_terms(15, [("Z" + "I" * 14, 1.0)]))


def test_dense_is_cached_and_read_only():
    h = PauliSum.from_terms(2, [("XX", 1.0)])
    m = dense(h)
    assert dense(h) is m
    with pytest.raises(ValueError):
        m[0, 0] = 1


# -- eigensystem ------------------------------------------------------------


def test_ground_energy_against_power_method(h10):
    ref_e, ref_v = power_ground(heisenberg_kron(10))
    es = eigensystem(h10)
    assert es.values[0] == pytest.approx(ref_e, abs=1e-9)
    assert fidelity(es.vectors[:, 0], ref_v) > 1 - 1e-8


def test_open_chain_spectrum_snapshot(h10):
    head = eigensystem(h10).values[:4]
    assert np.allclose(head, [-17.03214083, -16.72269436, -15.72269436, -15.10817429], atol=1e-8)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_eigh_reconstructs(seed):
    m = random_hermitian(np.random.default_rng(seed), 8)
    es = eigh(m)
    assert np.all(np.diff(es.values) >= 0)
    assert np.allclose(es.vectors @ np.diag(es.values) @ es.vectors.conj().T, m, atol=1e-10)
    assert np.allclose(es.vectors.conj().T @ es.vectors, np.eye(8), atol=1e-10)


def test_degenerate_basis_is_canonical():
    # Z on the first of two qubits: two doubly degenerate levels
    m = to_dense(PauliSum.from_terms(2, [("ZI", 1.0)]))
    a = eigh(m).vectors
    # pivots in index order, real positive: the computational basis
    assert np.allclose(a, np.eye(4)[:, [2, 3, 0, 1]], atol=1e-12)


def test_degenerate_basis_stable_under_permutation_of_input_basis(rng):
    # same operator written in two different orders of a degenerate eigenbasis
    q = np.linalg.qr(random_hermitian(rng, 6))[0]
    vals = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 2.0])
    m1 = q @ np.diag(vals) @ q.conj().T
    perm = [2, 0, 1, 4, 3, 5]
    m2 = q[:, perm] @ np.diag(vals[perm]) @ q[:, perm].conj().T
    v1, v2 = eigh(m1).vectors, eigh(m2).vectors
    assert np.allclose(v1, v2, atol=1e-9)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        eigh(np.array([[0, 1], [0, 0]], dtype=complex))


# -- exponentials and brackets ----------------------------------------------


@given(st.integers(0, 2**32 - 1), st.floats(-2, 2, allow_nan=False))
@settings(max_examples=30, deadline=None)
def test_exp_unitary_against_taylor(seed, theta):
    m = random_hermitian(np.random.default_rng(seed), 8)
    assert np.allclose(exp_unitary(m, theta), expm_taylor(1j * theta * m), atol=1e-10)


def test_commutator_against_loops(rng):
    a, b = random_hermitian(rng, 5), random_hermitian(rng, 5)
    assert np.allclose(commutator(a, b), loop_commutator(a, b), atol=1e-12)


def test_phase_distance_is_phase_blind(rng):
    v = rng.normal(size=4) + 0j
    v /= np.linalg.norm(v)
    assert phase_distance(v, np.exp(0.3j) * v) < 1e-15
    w = v + 1e-10 * np.array([1, -1, 0, 0])
    w /= np.linalg.norm(w)
    # resolves distances far below the sqrt(eps) cancellation floor
    assert phase_distance(v, w) == pytest.approx(np.linalg.norm(v - w), rel=1e-4)


# -- statevector files ------------------------------------------------------


def test_state_roundtrip(tmp_path, rng):
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    write_state(psi, tmp_path / "s.txt")
    assert np.allclose(read_state(tmp_path / "s.txt"), psi, rtol=0, atol=1e-15)


def test_state_renormalised_or_rejected(tmp_path):
    (tmp_path / "a.txt").write_text("n=1\n1.0000001 0\n0 0\n")
    assert np.linalg.norm(read_state(tmp_path / "a.txt")) == pytest.approx(1.0, abs=1e-15)
    (tmp_path / "b.txt").write_text("n=1\n0.5 0\n0 0\n")
    with pytest.raises(ValueError):
        read_state(tmp_path / "b.txt")
    (tmp_path / "c.txt").write_text("n=2\n1 0\n0 0\n")
    with pytest.raises(ValueError):
        read_state(tmp_path / "c.txt")
