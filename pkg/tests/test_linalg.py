import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from steercert import NotHermitianError, NotUnitaryError, DimensionError
from steercert.linalg import (
    dagger, fidelity, gen_pauli_x, gen_pauli_z, hermitize, is_unitary, kron, mat_power,
    max_eigenvalue, max_norm, normalize_phase, omega, partial_trace, proj, random_state,
    random_unitary,
)


def test_pauli_qubit():
    assert_allclose(gen_pauli_z(2), np.diag([1, -1]))
    assert_allclose(gen_pauli_x(2), [[0, 1], [1, 0]])


@pytest.mark.parametrize("d", range(2, 7))
def test_weyl_relation(d):
    Z, X = gen_pauli_z(d), gen_pauli_x(d)
    assert max_norm(Z @ X - omega(d) * X @ Z) < 1e-14
    assert_allclose(np.linalg.matrix_power(Z, d), np.eye(d), atol=1e-12)
    assert_allclose(np.linalg.matrix_power(X, d), np.eye(d), atol=1e-12)


def test_shift_action():
    X = gen_pauli_x(3)
    e0 = np.array([1, 0, 0])
    assert_allclose(X @ e0, [0, 1, 0])


def test_bad_dimension():
    with pytest.raises(DimensionError):
        gen_pauli_z(1)


def test_kron_order():
    a, b = np.diag([1, 2]), np.eye(3)
    assert_allclose(kron([a, b]), np.kron(a, b))


def test_mat_power_negative():
    Z = gen_pauli_z(3)
    assert_allclose(mat_power(Z, -1), Z.conj().T, atol=1e-14)
    assert_allclose(mat_power(Z, 4), Z, atol=1e-14)
    with pytest.raises(NotUnitaryError):
        mat_power(2 * np.eye(2), -1)


def test_hermitize_and_max_eig():
    H = hermitize(np.array([[0, 1], [0, 0]]))
    assert_allclose(H, [[0, 1], [1, 0]])
    assert max_eigenvalue(H) == pytest.approx(1.0)
    with pytest.raises(NotHermitianError):
        max_eigenvalue(np.array([[0, 1], [0, 0]]))


def test_partial_trace_product(rng):
    a, b = random_state(2, rng), random_state(3, rng)
    rho = proj(np.kron(a, b))
    assert_allclose(partial_trace(rho, [2, 3], [0]), proj(a), atol=1e-12)
    assert_allclose(partial_trace(rho, [2, 3], [1]), proj(b), atol=1e-12)


def test_partial_trace_bell():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert_allclose(partial_trace(proj(bell), [2, 2], [1]), np.eye(2) / 2, atol=1e-15)


def test_fidelity():
    psi = np.array([1, 0])
    assert fidelity(proj(psi), psi) == pytest.approx(1.0)
    assert fidelity(np.eye(2) / 2, psi) == pytest.approx(0.5)


def test_normalize_phase():
    v = np.exp(0.7j) * np.array([0, 0.6, 0.8])
    w = normalize_phase(v)
    assert w[1].imag == pytest.approx(0.0, abs=1e-15)
    assert w[1].real > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_random_unitary_is_unitary(n, seed):
    U = random_unitary(n, np.random.default_rng(seed))
    assert is_unitary(U)
    assert_allclose(U @ dagger(U), np.eye(n), atol=1e-12)
