"""Quantum values, closed-form quantum bounds and LHS (classical) bounds."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np
from scipy.optimize import minimize

from .exceptions import DimensionError, EnumerationCapError
from .linalg import dagger, gen_pauli_x, gen_pauli_z, mat_power, max_eigenvalue, omega
from .operators import Scenario, build_functional, family_shape

DEFAULT_CAP = 10 ** 6
DEFAULT_RESTARTS = 64
_CHUNK = 1 << 14


def worker_count():
    """Thread cap from STEERCERT_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("STEERCERT_THREADS", "1")))
    except ValueError:
        return 1


def quantum_value(F, psi):
    """<psi|F|psi> (or Tr[rho F] for a density matrix)."""
    m = F.matrix
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 2 and psi.shape[0] == psi.shape[1] and psi.shape[0] > 1:
        if psi.shape != m.shape:
            raise DimensionError(f"state shape {psi.shape} does not match functional {m.shape}")
        val = np.trace(psi @ m)
    else:
        psi = psi.ravel()
        if psi.size != m.shape[0]:
            raise DimensionError(f"state of size {psi.size} does not match functional {m.shape}")
        val = psi.conj() @ m @ psi
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)


# --- analytical LHS upper bounds --------------------------------------------

def _phase_bound(ops, restarts, rng):
    """max over pure states of sum_i 2 |<O_i>|.

    Uses 2|z| = max_theta 2 Re(e^{i theta} z), which turns the problem into
    maximizing the top eigenvalue of sum_i (e^{i theta_i} O_i + h.c.) over the
    phases.
    """
    ops = [np.asarray(o, dtype=complex) for o in ops]

    def neg(theta):
        ph = np.exp(1j * theta)
        h = sum(p * o for p, o in zip(ph, ops))
        h = h + dagger(h)
        w, v = np.linalg.eigh(h)
        top = v[:, -1]
        grad = np.array([-2 * np.real(1j * p * (top.conj() @ o @ top)) for p, o in zip(ph, ops)])
        return -w[-1], grad

    best = -np.inf
    starts = [np.zeros(len(ops))] + [rng.uniform(0, 2 * np.pi, len(ops)) for _ in range(restarts - 1)]
    for t0 in starts:
        res = minimize(neg, t0, jac=True, method="BFGS")
        best = max(best, -res.fun)
    return float(best)


def lhs_upper_graph(G, restarts=DEFAULT_RESTARTS, seed=0):
    """Upper bound on the LHS value of the graph functional.

    max_rho (2|<X_A>| + 2 sum_{j in n(0)} |<Z_A^gamma_{0j}>|) + 2 (N - deg(0) - 1)
    """
    d, n = G.d, G.n_vertices
    Z, X = gen_pauli_z(d), gen_pauli_x(d)
    ops = [X] + [mat_power(Z, G.gamma[0, j]) for j in G.neighbors(0)]
    rng = np.random.default_rng(seed)
    return _phase_bound(ops, max(1, restarts), rng) + 2 * (n - G.degree(0) - 1)


def _schmidt_forms(p):
    from .operators import schmidt_coefficients
    d, n, a = p.d, p.N, p.alpha
    gamma, _ = schmidt_coefficients(p)
    base = gamma * (np.ones((d, d)) - np.diag(a.sum() / a))
    forms = []
    for k in range(d):
        m = base.copy()
        m[k, k] += d * (n - 1)
        forms.append(m)
    return forms


def lhs_upper_schmidt(p):
    """Upper bound on the LHS value of the Schmidt functional.

    The objective d(N-1) max_a eta_a^2 + gamma[(sum eta)^2 - sum(alpha) sum eta_a^2/alpha_a]
    is, for a fixed maximizing index a, a quadratic form eta^T M_a eta with
    strictly positive off-diagonal entries.  By Perron-Frobenius its top
    eigenvector is entrywise positive, so the maximum over the non-negative
    part of the unit sphere equals the top eigenvalue of M_a.
    """
    best = max(np.linalg.eigvalsh(m)[-1] for m in _schmidt_forms(p))
    return float(best - (p.N - 2))


# --- exact LHS value by deterministic strategies ------------------------------

def strategy_count(F):
    return F.d ** (2 * (F.N - 1))


def _compile(F):
    """Alice matrices and Bob lookup tables for vectorized strategy evaluation."""
    d, A = F.d, F.scenario.alice_obs
    compiled = []
    for t in F.terms:
        amat = t.coef * t.slots[0].realize(A, d)
        lookups = []
        for p in range(1, F.N):
            sl = t.slots[p]
            if not sl.is_identity:
                table = np.array([sl.scalar(b, d) for b in range(d)])
                lookups.append((2 * (p - 1) + sl.setting, table))
        compiled.append((amat, lookups))
    return compiled


def _evaluate_chunk(F, compiled, start, stop):
    d, nvar = F.d, 2 * (F.N - 1)
    idx = np.arange(start, stop)
    # digit v of the strategy index is the outcome of Bob v//2 + 1 for setting v%2
    digits = (idx[:, None] // d ** np.arange(nvar - 1, -1, -1)[None, :]) % d
    mats = np.zeros((idx.size, d, d), dtype=complex)
    for amat, lookups in compiled:
        c = np.ones(idx.size, dtype=complex)
        for var, table in lookups:
            c *= table[digits[:, var]]
        mats += c[:, None, None] * amat[None]
    if F.include_hc:
        mats = mats + np.conj(np.swapaxes(mats, 1, 2))
    w, v = np.linalg.eigh(mats)
    top = w[:, -1]
    k = int(np.argmax(top))
    return float(top[k]), digits[k], v[k, :, -1]


@dataclass(frozen=True)
class StrategyOptimum:
    value: float
    outcomes: np.ndarray  # shape (N-1, 2): outcome of each Bob per setting
    alice_state: np.ndarray
    strategies: int


def lhs_enumeration_details(F, cap=DEFAULT_CAP, threads=None):
    """Best deterministic LHS strategy for ``F`` together with its value."""
    total = strategy_count(F)
    if total > cap:
        raise EnumerationCapError(
            f"{total} deterministic strategies exceed the cap of {cap}; "
            f"raise the cap or reduce N/d", total)
    compiled = _compile(F)
    bounds = [(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]
    threads = threads or worker_count()
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda b: _evaluate_chunk(F, compiled, *b), bounds))
    else:
        results = [_evaluate_chunk(F, compiled, *b) for b in bounds]
    # first chunk wins ties, independent of scheduling
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    val, digits, vec = results[best]
    return StrategyOptimum(val, np.asarray(digits).reshape(F.N - 1, 2), vec, total)


def lhs_exact_enumeration(F, s=None, cap=DEFAULT_CAP):
    """Exact LHS value: max over deterministic Bob strategies of the top
    eigenvalue of the induced Alice operator."""
    if s is not None and (s.N != F.N or s.d != F.d):
        raise DimensionError("scenario does not match the functional")
    return lhs_enumeration_details(F, cap).value


# --- reports ------------------------------------------------------------------

@dataclass
class BoundReport:
    family: str
    beta_q: float
    lhs_upper: float | None
    lhs_exact: float | None
    gap: float
    method: dict = field(default_factory=dict)

    def to_dict(self):
        return {"family": self.family, "beta_q": self.beta_q, "lhs_upper": self.lhs_upper,
                "lhs_exact": self.lhs_exact, "gap": self.gap, "method": self.method}


def bound_report(family, params, restarts=DEFAULT_RESTARTS, seed=0, cap=DEFAULT_CAP, scenario=None):
    n, d = family_shape(family, params)
    s = scenario or Scenario.ideal(n, d, family)
    F = build_functional(family, params, s)
    method = {"strategies": strategy_count(F), "enum_cap": cap}
    if family == "graph":
        upper = lhs_upper_graph(params, restarts, seed)
        method.update(upper_method="phase-parameterized top eigenvalue, multi-start BFGS",
                      restarts=restarts, seed=seed)
    elif family == "schmidt":
        upper = lhs_upper_schmidt(params)
        method.update(upper_method="Perron-Frobenius top eigenvalue")
    else:
        upper = None
        method.update(upper_method=None, note="analytical bound unavailable")
    try:
        exact = lhs_enumeration_details(F, cap).value
    except EnumerationCapError as exc:
        exact = None
        method["enumeration_skipped"] = str(exc)
    cands = [v for v in (upper, exact) if v is not None]
    gap = F.quantum_bound - max(cands) if cands else float("nan")
    return BoundReport(family, F.quantum_bound, upper, exact, float(gap), method)
