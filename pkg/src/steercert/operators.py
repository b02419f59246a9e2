"""Steering functionals for the graph, Schmidt and W families.

A functional is kept in two forms.  The symbolic form is a list of
:class:`Term` objects, each a coefficient times one *slot* per party, where a
slot is a linear combination of powers of a single observable of that party
(identity when the setting is ``None``).  This is enough to evaluate the
functional from a correlation table or against deterministic strategies.  The
realized form is the dense Hermitian matrix obtained by substituting the
scenario's observables.
"""

from dataclasses import dataclass, field
from functools import cached_property
import json

import numpy as np

from .exceptions import DimensionError, InvalidParamsError, NotUnitaryError, UnsupportedFamilyError
from .linalg import dagger, gen_pauli_x, gen_pauli_z, is_unitary, kron, max_norm, omega
from .states import Multigraph, SchmidtParams, WParams, graph_state, schmidt_state, w_state

FAMILIES = ("graph", "schmidt", "w")


@dataclass(frozen=True)
class Slot:
    """sum_p coeffs[p] * O^p for the observable O of one party at ``setting``."""

    setting: int | None = None
    powers: tuple = ((0, 1.0),)

    @classmethod
    def power(cls, setting, p, coef=1.0):
        return cls(setting, ((int(p), coef),))

    @property
    def is_identity(self):
        return self.setting is None or all(p == 0 for p, _ in self.powers)

    def realize(self, obs, dim):
        if self.setting is None:
            return sum(c for _, c in self.powers) * np.eye(dim, dtype=complex)
        u = obs[self.setting]
        out = np.zeros((dim, dim), dtype=complex)
        for p, c in self.powers:
            out += c * np.linalg.matrix_power(u, p)
        return out

    def scalar(self, outcome, d):
        """Value when the observable is replaced by its eigenvalue w^outcome."""
        if self.setting is None:
            return complex(sum(c for _, c in self.powers))
        w = omega(d)
        return complex(sum(c * w ** ((outcome * p) % d) for p, c in self.powers))


IDENTITY = Slot()
HALF_PLUS_B0 = Slot(0, ((0, 0.5), (1, 0.5)))  # (I + B_0) / 2


@dataclass(frozen=True)
class Term:
    coef: complex
    slots: tuple
    group: object = None


def _check_observable(u, d, what):
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"{what}: observable must be a square matrix")
    if not is_unitary(u, 1e-9):
        raise NotUnitaryError(f"{what}: observable is not unitary")
    if max_norm(np.linalg.matrix_power(u, d) - np.eye(u.shape[0])) > 1e-9:
        raise NotUnitaryError(f"{what}: observable does not satisfy U^{d} = I")
    return u


@dataclass(frozen=True, eq=False)
class Scenario:
    """Party count, outcome count and the observables of every party.

    ``alice_obs`` are the trusted measurements (Z_d, X_d by default).
    ``bob_obs[j]`` is the pair (B_{j+1,0}, B_{j+1,1}); Bob dimensions may
    exceed ``d``.
    """

    N: int
    d: int
    bob_obs: tuple
    alice_obs: tuple = None

    def __post_init__(self):
        if self.N < 2:
            raise InvalidParamsError("a scenario needs at least two parties")
        if self.alice_obs is None:
            object.__setattr__(self, "alice_obs", (gen_pauli_z(self.d), gen_pauli_x(self.d)))
        alice = tuple(_check_observable(u, self.d, f"Alice setting {x}")
                      for x, u in enumerate(self.alice_obs))
        if len(alice) != 2 or alice[0].shape != (self.d, self.d):
            raise DimensionError(f"Alice needs two {self.d}x{self.d} observables")
        object.__setattr__(self, "alice_obs", alice)
        if len(self.bob_obs) != self.N - 1:
            raise DimensionError(f"expected observables for {self.N - 1} Bobs, got {len(self.bob_obs)}")
        bobs = []
        for j, pair in enumerate(self.bob_obs, start=1):
            if len(pair) != 2:
                raise DimensionError(f"Bob {j} needs exactly two observables")
            b0 = _check_observable(pair[0], self.d, f"Bob {j} setting 0")
            b1 = _check_observable(pair[1], self.d, f"Bob {j} setting 1")
            if b0.shape != b1.shape:
                raise DimensionError(f"Bob {j} observables act on different dimensions")
            bobs.append((b0, b1))
        object.__setattr__(self, "bob_obs", tuple(bobs))

    @property
    def bob_dims(self):
        return [b[0].shape[0] for b in self.bob_obs]

    @property
    def dims(self):
        return [self.d] + self.bob_dims

    @property
    def dim(self):
        return int(np.prod(self.dims))

    def observables(self, party):
        return self.alice_obs if party == 0 else self.bob_obs[party - 1]

    @classmethod
    def ideal(cls, N, d, family="graph"):
        """Observables reaching the quantum bound on the reference state.

        Graph and W: (Z, X) for every Bob.  Schmidt: (Z^dagger, X), since
        the terms A_0^k (x) B_{j,0}^k must fix sum_i alpha_i |i..i>.
        """
        Z, X = gen_pauli_z(d), gen_pauli_x(d)
        b0 = dagger(Z) if family == "schmidt" else Z
        return cls(N, d, tuple((b0, X) for _ in range(N - 1)))

    def conjugated(self, unitaries):
        """Same scenario with Bob j's observables mapped to V_j B V_j^dagger."""
        bobs = tuple((v @ b0 @ dagger(v), v @ b1 @ dagger(v))
                     for v, (b0, b1) in zip(unitaries, self.bob_obs))
        return Scenario(self.N, self.d, bobs, self.alice_obs)


@dataclass(frozen=True, eq=False)
class SteeringFunctional:
    family: str
    N: int
    d: int
    terms: tuple
    include_hc: bool
    quantum_bound: float
    term_count: int
    scenario: Scenario
    group_weights: dict = field(default_factory=dict)

    @cached_property
    def matrix(self):
        """Dense realized operator (Hermitian)."""
        s = self.scenario
        dims = s.dims
        out = np.zeros((s.dim, s.dim), dtype=complex)
        for t in self.terms:
            out += t.coef * kron(sl.realize(s.observables(p), dims[p]) for p, sl in enumerate(t.slots))
        if self.include_hc:
            out = out + dagger(out)
        return out

    def condition_operators(self):
        """Per-group operators G with G psi = psi at maximal violation."""
        s = self.scenario
        dims = s.dims
        ops = {}
        for t in self.terms:
            m = t.coef * kron(sl.realize(s.observables(p), dims[p]) for p, sl in enumerate(t.slots))
            ops[t.group] = ops.get(t.group, 0) + m
        return [(g, ops[g] / self.group_weights[g]) for g in ops]

    def strategy_operator(self, outcomes):
        """Alice's d x d operator once every Bob answers deterministically.

        ``outcomes[j][y]`` is the outcome of Bob j+1 for setting y.
        """
        d = self.d
        A = self.scenario.alice_obs
        out = np.zeros((d, d), dtype=complex)
        for t in self.terms:
            c = t.coef
            for p in range(1, self.N):
                sl = t.slots[p]
                if not sl.is_identity:
                    c *= sl.scalar(outcomes[p - 1][sl.setting], d)
            out += c * t.slots[0].realize(A, d)
        if self.include_hc:
            out = out + dagger(out)
        return out


def _finish(family, N, d, terms, include_hc, bound, scenario, weights):
    count = len(terms) * (2 if include_hc else 1)
    f = SteeringFunctional(family, N, d, tuple(terms), include_hc, float(bound), count, scenario, weights)
    return f


def _check_scenario(s, N, d):
    if s.N != N or s.d != d:
        raise DimensionError(f"scenario has (N={s.N}, d={s.d}), functional needs (N={N}, d={d})")


def graph_steering_functional(G, s):
    n, d = G.n_vertices, G.d
    _check_scenario(s, n, d)
    gam = G.gamma
    nb0 = set(G.neighbors(0))
    terms = []

    slots = [Slot.power(1, 1)] + [IDENTITY] * (n - 1)
    for j in nb0:
        slots[j] = Slot.power(0, gam[0, j])
    terms.append(Term(1.0, tuple(slots), ("stab", 0)))

    for j in range(1, n):
        if j in nb0:
            slots = [Slot.power(0, gam[j, 0])] + [IDENTITY] * (n - 1)
        else:
            slots = [IDENTITY] * n
        slots[j] = Slot.power(1, 1)
        for jp in G.neighbors(j):
            if jp != 0:
                slots[jp] = Slot.power(0, gam[j, jp])
        terms.append(Term(1.0, tuple(slots), ("stab", j)))

    weights = {t.group: 1.0 for t in terms}
    return _finish("graph", n, d, terms, True, 2 * n, s, weights)


def schmidt_coefficients(p):
    """(gamma, delta) with delta[k] for k = 0..d-1; delta[0] = -1."""
    d, a = p.d, p.alpha
    ratios = np.outer(a, 1 / a)  # ratios[i, j] = a_i / a_j
    off = ratios - np.diag(np.diag(ratios))
    gamma = d / off.sum()
    w = omega(d)
    col = off.sum(axis=0)  # sum over i != j of a_i / a_j, per j
    k = np.arange(d)
    j = np.arange(d)
    delta = -(gamma / d) * (w ** np.outer(k, (d - j) % d) * col).sum(axis=1)
    return float(gamma), delta


def schmidt_steering_functional(p, s):
    d, n = p.d, p.N
    _check_scenario(s, n, d)
    gamma, delta = schmidt_coefficients(p)
    terms = []
    for k in range(1, d):
        for j in range(1, n):
            slots = [Slot.power(0, k)] + [IDENTITY] * (n - 1)
            slots[j] = Slot.power(0, k)
            terms.append(Term(1.0, tuple(slots), ("corr", j, k)))
        terms.append(Term(gamma, tuple([Slot.power(1, k)] + [Slot.power(1, k)] * (n - 1)), "T"))
        terms.append(Term(complex(delta[k]), tuple([Slot.power(0, k)] + [IDENTITY] * (n - 1)), "T"))
    weights = {t.group: 1.0 for t in terms}
    return _finish("schmidt", n, d, terms, False, (d - 1) * (n - 1) + 1, s, weights)


def w_coefficients(p):
    a = p.alpha
    den = a[1:] ** 2 + a[0] ** 2
    return 2 * a[1:] * a[0] / den, (a[1:] ** 2 - a[0] ** 2) / den


def _require_qubit(s):
    if s.d != 2:
        raise UnsupportedFamilyError("the W family is defined for d = 2 only")


def _pl_slots(n, l, first):
    """Slots of P_l: (I + B_{k,0})/2 on every Bob k != l, identity on Bob l."""
    slots = [first] + [HALF_PLUS_B0] * (n - 1)
    slots[l] = IDENTITY
    return slots


def projector_Pl(s, l):
    _require_qubit(s)
    if not 1 <= l <= s.N - 1:
        raise IndexError(f"Bob index {l} out of range 1..{s.N - 1}")
    slots = _pl_slots(s.N, l, IDENTITY)
    return kron(sl.realize(s.observables(p), s.dims[p]) for p, sl in enumerate(slots))


def w_steering_functional(p, s):
    _require_qubit(s)
    n = p.N
    _check_scenario(s, n, 2)
    gam, dl = w_coefficients(p)
    Z0, X1 = Slot.power(0, 1), Slot.power(1, 1)
    terms = [Term(-2.0, tuple([Z0] + [Slot.power(0, 1)] * (n - 1)), "parity")]
    weights = {"parity": 2.0}
    for l in range(1, n):
        g = ("alice", l)
        weights[g] = 1.0
        # Z_A (I - P_l) + (gamma X_A B_{l,1} + delta Z_A) P_l
        terms.append(Term(1.0, tuple([Z0] + [IDENTITY] * (n - 1)), g))
        terms.append(Term(dl[l - 1] - 1.0, tuple(_pl_slots(n, l, Z0)), g))
        slots = _pl_slots(n, l, Slot.power(1, 1))
        slots[l] = X1
        terms.append(Term(gam[l - 1], tuple(slots), g))
    for l in range(1, n):
        g = ("bob", l)
        weights[g] = 1.0
        # B_{l,0} (I - P_l) + P_l
        slots = [IDENTITY] * n
        slots[l] = Slot.power(0, 1)
        terms.append(Term(1.0, tuple(slots), g))
        slots = _pl_slots(n, l, IDENTITY)
        slots[l] = Slot.power(0, 1)
        terms.append(Term(-1.0, tuple(slots), g))
        terms.append(Term(1.0, tuple(_pl_slots(n, l, IDENTITY)), g))
    return _finish("w", n, 2, terms, False, 2 * n, s, weights)


def build_functional(family, params, s):
    if family == "graph":
        return graph_steering_functional(params, s)
    if family == "schmidt":
        return schmidt_steering_functional(params, s)
    if family == "w":
        return w_steering_functional(params, s)
    raise UnsupportedFamilyError(f"unknown family {family!r}")


def reference_state(family, params):
    if family == "graph":
        return graph_state(params)
    if family == "schmidt":
        return schmidt_state(params)
    if family == "w":
        return w_state(params)
    raise UnsupportedFamilyError(f"unknown family {family!r}")


def family_shape(family, params):
    """(N, d) of a family parameter object."""
    if family == "graph":
        return params.n_vertices, params.d
    return params.N, params.d


# --- scenario files -------------------------------------------------------

def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(obj):
    a = np.asarray(obj, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2:
        raise DimensionError("matrices are encoded as nested [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """Everything a scenario file describes: family, parameters and observables."""

    family: str
    params: object
    scenario: Scenario

    def functional(self):
        return build_functional(self.family, self.params, self.scenario)

    def reference_state(self):
        return reference_state(self.family, self.params)


def parse_scenario(obj):
    """Build a :class:`ScenarioSpec` from the scenario JSON object (or string)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise InvalidParamsError("scenario must be a JSON object")
    family = obj.get("family")
    if family not in FAMILIES:
        raise InvalidParamsError(f"'family' must be one of {FAMILIES}, got {family!r}")
    if family == "graph":
        if "graph" not in obj:
            raise InvalidParamsError("graph scenario needs a 'graph' object")
        params = Multigraph.from_json(obj["graph"])
        N, d = params.n_vertices, params.d
    elif family == "schmidt":
        if "alpha" not in obj:
            raise InvalidParamsError("schmidt scenario needs 'alpha'")
        alpha = obj["alpha"]
        d = int(obj.get("d", len(alpha)))
        N = int(obj["N"])
        params = SchmidtParams(d, N, alpha)
    else:
        if "alpha" not in obj:
            raise InvalidParamsError("w scenario needs 'alpha'")
        alpha = obj["alpha"]
        N = int(obj.get("N", len(alpha)))
        d = int(obj.get("d", 2))
        if d != 2:
            raise UnsupportedFamilyError("the W family is defined for d = 2 only")
        params = WParams(N, alpha)
    for key, val in (("N", N), ("d", d)):
        if key in obj and int(obj[key]) != val:
            raise InvalidParamsError(f"'{key}' = {obj[key]} is inconsistent with the family parameters ({val})")
    bobs = obj.get("bob_observables", "ideal")
    if bobs == "ideal":
        s = Scenario.ideal(N, d, family)
    else:
        if not isinstance(bobs, list):
            raise InvalidParamsError("'bob_observables' must be 'ideal' or a list of matrix pairs")
        s = Scenario(N, d, tuple((decode_matrix(p[0]), decode_matrix(p[1])) for p in bobs))
    return ScenarioSpec(family, params, s)
