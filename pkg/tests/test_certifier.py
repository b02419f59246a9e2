import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from steercert import (
    Multigraph, NotCertifiableError, NotUnitaryError, Scenario, SchmidtParams, WParams,
    anticommutation_residual, build_functional, canonical_form, depolarize, extract_and_compare,
    graph_commutation_residual, reference_state, scrambled_instance, stabilization_residuals,
    w_amplitude_recovery, w_state,
)
from steercert.certifier import extract, purify
from steercert.linalg import dagger, gen_pauli_x, gen_pauli_z, is_unitary, max_norm, random_unitary

FIXTURES = [
    ("graph", Multigraph.ring(4, 3)),
    ("graph", Multigraph.from_edges(3, 3, [(0, 1, 2), (1, 2, 1), (0, 2, 1)])),
    ("schmidt", SchmidtParams.normalized(3, [1.0, 0.5, 0.8])),
    ("schmidt", SchmidtParams.equal(2, 2)),
    ("w", WParams(3, [0.6, 0.48, 0.64])),
    ("w", WParams.normalized([1, 2, 3, 4])),
]


def _ideal(family, params):
    N = params.n_vertices if family == "graph" else params.N
    return Scenario.ideal(N, params.d, family)


def test_commutation_examples():
    for d in range(2, 7):
        assert graph_commutation_residual(gen_pauli_z(d), gen_pauli_x(d), 1, d) < 1e-14
    Z = gen_pauli_z(2)
    assert graph_commutation_residual(Z, Z, 1, 2) == pytest.approx(2.0)
    with pytest.raises(NotUnitaryError):
        graph_commutation_residual(2 * np.eye(2), np.eye(2), 1, 2)


def test_anticommutation_examples():
    Z, X = gen_pauli_z(2), gen_pauli_x(2)
    assert anticommutation_residual(Z, X) == 0
    assert anticommutation_residual(Z, Z) == pytest.approx(2.0)
    assert anticommutation_residual(np.kron(Z, np.eye(2)), np.kron(X, np.eye(2))) == 0
    with pytest.raises(NotUnitaryError):
        anticommutation_residual(gen_pauli_z(3), gen_pauli_x(3))


def test_canonical_form_identity():
    U, m = canonical_form(gen_pauli_z(3), gen_pauli_x(3), 3)
    assert m == 1
    assert_allclose(U, np.eye(3), atol=1e-12)


def test_canonical_form_recovers_junk(rng):
    V = random_unitary(6, rng)
    Z = np.kron(gen_pauli_z(3), np.eye(2))
    X = np.kron(gen_pauli_x(3), np.eye(2))
    U, m = canonical_form(V @ Z @ dagger(V), V @ X @ dagger(V), 3)
    assert m == 2 and is_unitary(U)
    assert max_norm(U @ V @ Z @ dagger(V) @ dagger(U) - Z) < 1e-8
    assert max_norm(U @ V @ X @ dagger(V) @ dagger(U) - X) < 1e-8


def test_canonical_form_rejects():
    Z = gen_pauli_z(2)
    with pytest.raises(NotCertifiableError):
        canonical_form(Z, Z, 2)
    with pytest.raises(NotCertifiableError):
        canonical_form(np.eye(3), np.eye(3), 2)


@pytest.mark.parametrize("family,params", FIXTURES)
def test_ideal_certified(family, params):
    rep = extract_and_compare(reference_state(family, params), _ideal(family, params), family, params)
    assert rep.certified, rep.failures
    assert rep.fidelity_to_reference == pytest.approx(1.0, abs=1e-9)
    assert "asymptotic conditions checked at tolerance" in rep.notes


@pytest.mark.parametrize("family,params", FIXTURES)
@pytest.mark.parametrize("env", [1, 2])
def test_scrambled_round_trip(family, params, env, rng):
    psi, s = scrambled_instance(family, params, rng, env_dim=env)
    rep = extract_and_compare(psi, s, family, params, env_dim=env)
    assert rep.certified, rep.failures
    assert rep.fidelity_to_reference >= 1 - 1e-7
    assert max(rep.commutation_residuals + rep.stabilization_residuals) <= 1e-8
    junk = rep.junk_state
    assert np.trace(junk).real == pytest.approx(1.0, abs=1e-9)
    assert max_norm(junk - dagger(junk)) < 1e-12


def test_junk_local_unitary_invariance(rng):
    params = SchmidtParams.normalized(3, [1.0, 0.5, 0.8])
    psi, s = scrambled_instance("schmidt", params, rng, max_junk=3)
    a = extract_and_compare(psi, s, "schmidt", params).fidelity_to_reference
    # Bob j = V_j (C^d (x) C^m_j); a unitary on the junk factor commutes with his observables
    ops = [np.eye(3)]
    for b0, _ in s.bob_obs:
        U, m = canonical_form(b0.conj().T, s.bob_obs[len(ops) - 1][1], 3)
        ops.append(dagger(U) @ np.kron(np.eye(3), random_unitary(m, rng)) @ U)
    W = ops[0]
    for o in ops[1:]:
        W = np.kron(W, o)
    b = extract_and_compare(W @ psi, s, "schmidt", params).fidelity_to_reference
    assert a == pytest.approx(1.0, abs=1e-9)
    assert b == pytest.approx(a, abs=1e-9)


@pytest.mark.parametrize("family,params", FIXTURES)
@pytest.mark.parametrize("v", [0.5, 0.95])
def test_depolarized_rejected(family, params, v):
    s = _ideal(family, params)
    F = build_functional(family, params, s)
    rep = extract_and_compare(depolarize(reference_state(family, params), v), s, family, params)
    assert not rep.certified
    expected = (1 - v) * (F.quantum_bound - np.trace(F.matrix).real / s.dim)
    assert rep.deficit == pytest.approx(expected, abs=1e-10)
    assert rep.deficit > 0


def test_depolarized_stabilization_positive():
    p = SchmidtParams.equal(3, 2)
    F = build_functional("schmidt", p, _ideal("schmidt", p))
    ideal = stabilization_residuals(F, reference_state("schmidt", p))
    assert ideal.max() < 1e-10
    psi, _ = purify(depolarize(reference_state("schmidt", p), 0.9))
    assert stabilization_residuals(F, psi).min() > 0


def test_w_ratios():
    assert_allclose(w_amplitude_recovery(w_state(WParams.equal(3)), WParams.equal(3)), [1, 1])
    p = WParams(3, [0.6, 0.48, 0.64])
    assert_allclose(w_amplitude_recovery(w_state(p), p), [0.8, 16 / 15], atol=1e-12)
    ghz = np.zeros(8)
    ghz[[0, 7]] = 2 ** -0.5
    with pytest.raises(NotCertifiableError):
        w_amplitude_recovery(ghz, p)


def test_report_json():
    p = WParams.equal(3)
    rep = extract_and_compare(w_state(p), _ideal("w", p), "w", p)
    d = rep.to_dict(include_matrices=True)
    json.dumps(d)
    assert d["certified"] is True
    assert "extraction_unitaries" in d
    assert "extraction_unitaries" not in rep.to_dict() or rep.to_dict()["extraction_unitaries"] is None


def test_bad_observables_named():
    p = Multigraph.single_edge(2)
    s = Scenario(2, 2, ((gen_pauli_z(2), gen_pauli_z(2)),))
    rep = extract_and_compare(reference_state("graph", p), s, "graph", p)
    assert not rep.certified
    assert any("algebraic relation" in f for f in rep.failures)
