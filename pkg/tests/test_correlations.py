import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from steercert import (
    CorrelationTable, Multigraph, Scenario, SchmidtParams, SteerCertError, WParams, born_table,
    build_functional, depolarize, functional_value_from_table, generalized_expectations,
    quantum_value, reference_state,
)
from steercert.correlations import (
    LHSModel, lhs_table, outcome_projectors, read_table_csv, sample_table,
    table_from_expectations, write_table_csv,
)
from steercert.linalg import gen_pauli_x, gen_pauli_z, random_state, random_unitary


@pytest.mark.parametrize("d", [2, 3, 4])
def test_outcome_projectors_resolve_identity(d, rng):
    V = random_unitary(d, rng)
    U = V @ gen_pauli_x(d) @ V.conj().T
    P = outcome_projectors(U, d)
    assert_allclose(sum(P), np.eye(d), atol=1e-12)
    w = np.exp(2j * np.pi / d)
    assert_allclose(sum(w ** b * P[b] for b in range(d)), U, atol=1e-12)


def test_bell_table():
    # |Phi+> measured in Z on both sides: perfectly correlated
    s = Scenario.ideal(2, 2)
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    T = born_table(psi, s)
    assert_allclose(T.p[0, 0], [[0.5, 0], [0, 0.5]], atol=1e-15)
    T.validate()


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["graph", "schmidt", "w"]), st.integers(0, 2 ** 31))
def test_table_matches_trace_formula(family, seed):
    rng = np.random.default_rng(seed)
    params = {"graph": Multigraph.triangle(2), "schmidt": SchmidtParams.equal(3, 2),
              "w": WParams.normalized([1.0, 2.0, 0.5])}[family]
    N = params.n_vertices if family == "graph" else params.N
    d = params.d
    s = Scenario.ideal(N, d, family).conjugated([random_unitary(d, rng) for _ in range(N - 1)])
    F = build_functional(family, params, s)
    rho = depolarize(random_state(s.dim, rng), rng.uniform(0, 1))
    T = born_table(rho, s).validate()
    assert functional_value_from_table(F, T) == pytest.approx(quantum_value(F, rho), abs=1e-10)


def test_fourier_round_trip(rng):
    s = Scenario.ideal(3, 3, "schmidt")
    T = born_table(random_state(27, rng), s)
    E = generalized_expectations(T)
    assert E[(0, 0, 0) + (0, 0, 0)] == pytest.approx(1.0)
    assert_allclose(table_from_expectations(E, 3, 3).p, T.p, atol=1e-14)


def test_lhs_table_is_non_signaling(rng):
    d = 3
    outcomes = np.array([[0, 2], [1, 1]])
    m = LHSModel.deterministic(outcomes, random_state(d, rng), d)
    T = lhs_table(m, Scenario.ideal(3, d, "schmidt")).validate()
    # Bob 1 answers 0 to y=0 and 2 to y=1; Bob 2 answers 1 to both
    assert T.p[0, 0, 1].sum(axis=(0, 2))[0] == pytest.approx(1.0)
    assert T.p[0, 1, 0].sum(axis=(0, 2))[2] == pytest.approx(1.0)
    assert T.p[1, 1, 1].sum(axis=(0, 1))[1] == pytest.approx(1.0)


def test_lhs_model_validation():
    with pytest.raises(SteerCertError):
        LHSModel(np.array([0.7, 0.7]), (np.eye(2) / 2,) * 2, (np.ones((1, 2, 2)) / 2,) * 2)


def test_csv_round_trip(tmp_path, rng):
    T = born_table(random_state(8, rng), Scenario.ideal(3, 2, "w"))
    path = tmp_path / "t.csv"
    write_table_csv(T, path)
    assert_allclose(read_table_csv(path).p, T.p)


def test_csv_rejects_unnormalized(tmp_path):
    p = np.full((2, 2, 2, 2), 0.3)
    path = tmp_path / "bad.csv"
    write_table_csv(CorrelationTable(2, 2, p), path)
    with pytest.raises(SteerCertError):
        read_table_csv(path)


def test_sampling_converges(rng):
    T = born_table(reference_state("graph", Multigraph.single_edge(2)), Scenario.ideal(2, 2))
    S = sample_table(T, 20000, rng)
    assert np.abs(S.p - T.p).max() < 0.02
    S.validate(check_signaling=False)


def test_shape_check():
    with pytest.raises(SteerCertError):
        CorrelationTable(2, 2, np.zeros((2, 2, 2)))
