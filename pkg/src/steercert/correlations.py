"""Correlation tables p(a, b | x, y): Born rule, LHS models, Fourier picture."""

from dataclasses import dataclass
import csv
import itertools

import numpy as np

from .exceptions import DimensionError, NotUnitaryError, SteerCertError
from .linalg import max_norm, omega, proj

MAX_TABLE_PARTIES = 8


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    """Dense table ``p[x, y1..y_{N-1}, a, b1..b_{N-1}]`` (two settings per party)."""

    N: int
    d: int
    p: np.ndarray

    def __post_init__(self):
        shape = (2,) * self.N + (self.d,) * self.N
        p = np.asarray(self.p, dtype=float)
        if p.shape != shape:
            raise DimensionError(f"table shape {p.shape}, expected {shape}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def outcome_axes(self):
        return tuple(range(self.N, 2 * self.N))

    def normalization_residual(self):
        return max_norm(self.p.sum(axis=self.outcome_axes) - 1)

    def min_entry(self):
        return float(self.p.min())

    def signaling_residual(self):
        """Largest change of any party-removed marginal under that party's setting."""
        worst = 0.0
        for i in range(self.N):
            marg = self.p.sum(axis=self.N + i)
            diff = np.take(marg, 1, axis=i) - np.take(marg, 0, axis=i)
            worst = max(worst, max_norm(diff))
        return worst

    def validate(self, tol=1e-9, signaling_tol=1e-8, check_signaling=True):
        if self.normalization_residual() > tol:
            raise SteerCertError("conditional distributions are not normalized")
        if self.min_entry() < -1e-12:
            raise SteerCertError("table has negative probabilities")
        if check_signaling and self.signaling_residual() > signaling_tol:
            raise SteerCertError("table violates no-signaling")
        return self


def _check_table_size(n, cap):
    if n > cap:
        raise SteerCertError(
            f"a full table for N={n} parties exceeds the cap N <= {cap}; "
            "evaluate functionals on states directly instead")


def outcome_projectors(u, d):
    """Projectors N_b = (1/d) sum_l w^{-bl} U^l onto the w^b eigenspaces of U."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    if max_norm(np.linalg.matrix_power(u, d) - np.eye(dim)) > 1e-9:
        raise NotUnitaryError(f"observable does not satisfy U^{d} = I")
    w = omega(d)
    powers = [np.linalg.matrix_power(u, l) for l in range(d)]
    return np.array([sum(w ** (-(b * l) % d) * powers[l] for l in range(d)) / d for b in range(d)])


def _as_density(rho, dim):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1 or (rho.ndim == 2 and 1 in rho.shape):
        rho = proj(rho)
    if rho.shape != (dim, dim):
        raise DimensionError(f"state of shape {rho.shape} does not match scenario dimension {dim}")
    return rho


def born_table(rho, s, max_parties=MAX_TABLE_PARTIES):
    """Full table from the Born rule for state ``rho`` (vector or density matrix)."""
    _check_table_size(s.N, max_parties)
    dims = s.dims
    n, d = s.N, s.d
    t = _as_density(rho, s.dim).reshape(dims + dims)
    # contract one party at a time; new (x, a) axes are appended at the end
    for i in range(n):
        obs = s.observables(i)
        stack = np.array([outcome_projectors(u, d) for u in obs])  # (2, d, D, D)
        k = n - i  # ket axis of party i sits at position 0 after earlier contractions
        t = np.tensordot(t, stack, axes=([0, k], [3, 2]))
    # axes now: x0, a0, x1, a1, ...
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    p = np.real(t).transpose(order)
    return CorrelationTable(n, d, np.clip(p, 0.0, None) if p.min() > -1e-12 else p)


@dataclass(frozen=True, eq=False)
class LHSModel:
    """Hidden states for Alice plus local response tables for every Bob.

    ``bob_responses[lam]`` has shape (N-1, 2, d): p(b_j | y_j, lam).
    """

    weights: np.ndarray
    alice_states: tuple
    bob_responses: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if abs(w.sum() - 1) > 1e-9 or np.any(w < 0):
            raise SteerCertError("hidden-variable weights must form a probability distribution")
        for r in self.bob_responses:
            r = np.asarray(r)
            if np.any(r < -1e-12) or max_norm(r.sum(axis=-1) - 1) > 1e-9:
                raise SteerCertError("Bob response tables must be row-stochastic")
        object.__setattr__(self, "weights", w)

    @classmethod
    def deterministic(cls, outcomes, alice_state, d):
        """Single hidden state with Bob j answering ``outcomes[j][y]``."""
        outcomes = np.asarray(outcomes, dtype=int)
        r = np.zeros(outcomes.shape + (d,))
        for j, y in itertools.product(range(outcomes.shape[0]), range(2)):
            r[j, y, outcomes[j, y]] = 1.0
        rho = _as_density(alice_state, d)
        return cls(np.array([1.0]), (rho,), (r,))


def lhs_table(m, s, max_parties=MAX_TABLE_PARTIES):
    _check_table_size(s.N, max_parties)
    n, d = s.N, s.d
    alice = np.array([outcome_projectors(u, d) for u in s.alice_obs])  # (2, d, d, d)
    p = np.zeros((2,) * n + (d,) * n)
    for w, rho, resp in zip(m.weights, m.alice_states, m.bob_responses):
        pa = np.real(np.einsum("xaij,ji->xa", alice, rho))
        t = pa
        for j in range(n - 1):
            t = np.multiply.outer(t, np.asarray(resp[j]))  # appends (y_j, b_j)
        # axes: x, a, y1, b1, y2, b2, ...
        order = [0] + [2 + 2 * j for j in range(n - 1)] + [1] + [3 + 2 * j for j in range(n - 1)]
        p += w * t.transpose(order)
    return CorrelationTable(n, d, p)


def generalized_expectations(T):
    """E[x, y, k, l] = sum_{a,b} w^{ak + sum_j b_j l_j} p(a, b | x, y)."""
    axes = T.outcome_axes
    return np.fft.ifftn(T.p, axes=axes) * T.d ** T.N


def table_from_expectations(E, N, d):
    axes = tuple(range(N, 2 * N))
    return CorrelationTable(N, d, np.real(np.fft.fftn(E, axes=axes)) / d ** N)


def functional_value_from_table(F, T):
    """Evaluate a functional using only the table's generalized expectations."""
    if T.N != F.N or T.d != F.d:
        raise DimensionError("table and functional disagree on (N, d)")
    E = generalized_expectations(T)
    total = 0j
    for t in F.terms:
        choices = []
        for sl in t.slots:
            if sl.setting is None:
                choices.append([(0, 0, c) for _, c in sl.powers])
            elif sl.setting in (0, 1):
                choices.append([(sl.setting, p % F.d, c) for p, c in sl.powers])
            else:
                raise SteerCertError(f"term references setting {sl.setting}, tables carry only 0 and 1")
        for combo in itertools.product(*choices):
            idx = tuple(c[0] for c in combo) + tuple(c[1] for c in combo)
            total += t.coef * np.prod([c[2] for c in combo]) * E[idx]
    if F.include_hc:
        return float(2 * total.real)
    return float(total.real)


def depolarize(psi, v):
    """v |psi><psi| + (1 - v) I / dim."""
    if not 0 <= v <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    psi = np.asarray(psi, dtype=complex).ravel()
    dim = psi.size
    return v * proj(psi) + (1 - v) * np.eye(dim) / dim


def sample_table(T, shots, rng):
    """Empirical table from ``shots`` multinomial draws per setting combination."""
    n, d = T.N, T.d
    p = np.zeros_like(T.p)
    for x in itertools.product(range(2), repeat=n):
        probs = np.clip(T.p[x].ravel(), 0, None)
        counts = rng.multinomial(shots, probs / probs.sum())
        p[x] = counts.reshape((d,) * n) / shots
    return CorrelationTable(n, d, p)


# --- CSV ----------------------------------------------------------------------

def _header(n):
    return (["x"] + [f"y{j}" for j in range(1, n)] + ["a"] + [f"b{j}" for j in range(1, n)] + ["p"])


def write_table_csv(T, path):
    n = T.N
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(_header(n))
        for idx in itertools.product(*(range(k) for k in T.p.shape)):
            wr.writerow(list(idx) + [repr(float(T.p[idx]))])


def read_table_csv(path, d=None, check_signaling=True, tol=1e-9):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SteerCertError("empty CSV table")
    head = rows[0]
    n = (len(head) - 1) // 2
    if head != _header(n):
        raise SteerCertError(f"unexpected CSV header {head}")
    body = [[int(v) for v in r[:-1]] + [float(r[-1])] for r in rows[1:] if r]
    if d is None:
        d = 1 + max(max(r[n:2 * n]) for r in body)
    p = np.zeros((2,) * n + (d,) * n)
    seen = np.zeros(p.shape, dtype=bool)
    for r in body:
        idx = tuple(r[:-1])
        if seen[idx]:
            raise SteerCertError(f"duplicate CSV row for event {idx}")
        seen[idx] = True
        p[idx] = r[-1]
    T = CorrelationTable(n, d, p)
    return T.validate(tol=tol, check_signaling=check_signaling)
