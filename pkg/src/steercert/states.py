"""Reference states: qudit graph states, Schmidt states and generalized W states."""

from dataclasses import dataclass, field
import itertools
import json

import numpy as np

from .exceptions import DimensionError, InvalidGraphError, InvalidParamsError
from .linalg import gen_pauli_x, gen_pauli_z, kron, mat_power, omega


@dataclass(frozen=True, eq=False)
class Multigraph:
    """Undirected multigraph with edge multiplicities taken mod d.

    ``gamma[i, j]`` is the multiplicity of the edge {i, j}.  Vertex 0 is the
    trusted party.  Disconnected graphs are rejected unless
    ``allow_disconnected`` is set; such graphs are fine for exploration but
    fall outside what the certification statements cover.
    """

    d: int
    gamma: np.ndarray
    allow_disconnected: bool = field(default=False, repr=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DimensionError(f"local dimension must be >= 2, got {self.d!r}")
        g = np.array(self.gamma, dtype=int)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidGraphError("gamma must be a square matrix")
        if g.shape[0] < 2:
            raise InvalidGraphError("a multigraph needs at least 2 vertices")
        if np.any(g < 0) or np.any(g >= self.d):
            raise InvalidGraphError(f"edge multiplicities must lie in 0..{self.d - 1}")
        if not np.array_equal(g, g.T):
            raise InvalidGraphError("gamma must be symmetric")
        if np.any(np.diag(g) != 0):
            raise InvalidGraphError("gamma must have a zero diagonal")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "d", int(self.d))
        if not self.allow_disconnected and not self.is_connected():
            raise InvalidGraphError("graph is not connected")

    @property
    def n_vertices(self):
        return self.gamma.shape[0]

    def neighbors(self, i):
        return [j for j in range(self.n_vertices) if self.gamma[i, j] != 0]

    def degree(self, i):
        return len(self.neighbors(i))

    def edges(self):
        n = self.n_vertices
        return [(i, j, int(self.gamma[i, j])) for i in range(n) for j in range(i + 1, n)
                if self.gamma[i, j] != 0]

    def is_connected(self):
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    @classmethod
    def from_edges(cls, n, d, edges, allow_disconnected=False):
        g = np.zeros((n, n), dtype=int)
        for e in edges:
            if len(e) == 2:
                i, j = e
                mult = 1
            elif len(e) == 3:
                i, j, mult = e
            else:
                raise InvalidGraphError(f"edge must be [i, j] or [i, j, gamma], got {e!r}")
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise InvalidGraphError(f"bad edge {e!r} for {n} vertices")
            g[i, j] = g[j, i] = mult
        return cls(d, g, allow_disconnected=allow_disconnected)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls.from_edges(int(obj["vertices"]), int(obj["d"]), obj["edges"],
                                  allow_disconnected=bool(obj.get("allow_disconnected", False)))
        except KeyError as exc:
            raise InvalidGraphError(f"multigraph JSON is missing key {exc}") from None

    def to_json(self):
        return {"d": self.d, "vertices": self.n_vertices,
                "edges": [list(e) for e in self.edges()]}

    # common shapes
    @classmethod
    def single_edge(cls, d=2, gamma=1):
        return cls.from_edges(2, d, [(0, 1, gamma)])

    @classmethod
    def triangle(cls, d=2):
        return cls.from_edges(3, d, [(0, 1), (1, 2), (0, 2)])

    @classmethod
    def ring(cls, n, d=2):
        return cls.from_edges(n, d, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def star(cls, n, d=2, center=0):
        return cls.from_edges(n, d, [(center, j) for j in range(n) if j != center])


def random_multigraph(n, d, rng, extra_edge_prob=0.4):
    """Random connected multigraph: a random spanning tree plus extra edges."""
    g = np.zeros((n, n), dtype=int)
    order = rng.permutation(n)
    for k in range(1, n):
        i, j = order[k], order[rng.integers(k)]
        g[i, j] = g[j, i] = rng.integers(1, d)
    for i, j in itertools.combinations(range(n), 2):
        if g[i, j] == 0 and rng.random() < extra_edge_prob:
            g[i, j] = g[j, i] = rng.integers(1, d)
    return Multigraph(d, g)


def _check_alpha(alpha, length, what):
    a = np.asarray(alpha, dtype=float).ravel()
    if a.size != length:
        raise InvalidParamsError(f"{what}: expected {length} coefficients, got {a.size}")
    if np.any(a <= 0):
        raise InvalidParamsError(f"{what}: coefficients must be strictly positive")
    if abs(np.sum(a ** 2) - 1) > 1e-10:
        raise InvalidParamsError(f"{what}: squared coefficients must sum to 1")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SchmidtParams:
    d: int
    N: int
    alpha: np.ndarray

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DimensionError(f"d must be >= 2, got {self.d!r}")
        if int(self.N) != self.N or self.N < 2:
            raise InvalidParamsError(f"N must be >= 2, got {self.N!r}")
        object.__setattr__(self, "alpha", _check_alpha(self.alpha, self.d, "SchmidtParams"))

    @classmethod
    def normalized(cls, N, alpha):
        a = np.asarray(alpha, dtype=float)
        return cls(a.size, N, a / np.linalg.norm(a))

    @classmethod
    def equal(cls, d, N):
        return cls(d, N, np.full(d, 1 / np.sqrt(d)))


@dataclass(frozen=True, eq=False)
class WParams:
    N: int
    alpha: np.ndarray

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvalidParamsError(f"N must be >= 2, got {self.N!r}")
        object.__setattr__(self, "alpha", _check_alpha(self.alpha, self.N, "WParams"))

    @property
    def d(self):
        return 2

    @classmethod
    def normalized(cls, alpha):
        a = np.asarray(alpha, dtype=float)
        return cls(a.size, a / np.linalg.norm(a))

    @classmethod
    def equal(cls, N):
        return cls(N, np.full(N, 1 / np.sqrt(N)))


def graph_state(G):
    """|G> = prod_{i<j} CZ_{ij}^{gamma_ij} |+>^N, edges applied in lexicographic order."""
    d, n = G.d, G.n_vertices
    if not G.is_connected() and not G.allow_disconnected:
        raise InvalidGraphError("graph is not connected")
    q = np.indices((d,) * n).reshape(n, -1)
    psi = np.full(d ** n, d ** (-n / 2), dtype=complex)
    w = omega(d)
    for i, j, mult in G.edges():
        # controlled-Z^gamma is diagonal with phase w^(gamma q_i q_j)
        psi *= w ** ((mult * q[i] * q[j]) % d)
    return psi


def stabilizer(G, i):
    """S_i(G): X on vertex i, Z^gamma_ij on each neighbour j, identity elsewhere."""
    n = G.n_vertices
    if not 0 <= i < n:
        raise IndexError(f"vertex {i} out of range for {n} vertices")
    d = G.d
    Z, X, I = gen_pauli_z(d), gen_pauli_x(d), np.eye(d, dtype=complex)
    factors = []
    for j in range(n):
        if j == i:
            factors.append(X)
        elif G.gamma[i, j]:
            factors.append(mat_power(Z, G.gamma[i, j]))
        else:
            factors.append(I)
    return kron(factors)


def verify_stabilized(psi, ops, tol=1e-9):
    """Check S psi = psi for every operator; returns (ok, residuals)."""
    psi = np.asarray(psi, dtype=complex).ravel()
    res = []
    for op in ops:
        op = np.asarray(op)
        if op.shape != (psi.size, psi.size):
            raise DimensionError(f"operator shape {op.shape} vs state of size {psi.size}")
        res.append(float(np.linalg.norm(op @ psi - psi)))
    res = np.array(res)
    return bool(np.all(res <= tol)), res


def schmidt_state(p):
    """sum_i alpha_i |i>^N."""
    d, n = p.d, p.N
    psi = np.zeros(d ** n, dtype=complex)
    step = sum(d ** k for k in range(n))  # flat index of |i...i> is i * step
    psi[np.arange(d) * step] = p.alpha
    return psi


def w_state(p):
    """sum_l alpha_{l+1} |0..1_l..0>, with party 0 (Alice) the most significant qubit."""
    n = p.N
    psi = np.zeros(2 ** n, dtype=complex)
    for l in range(n):
        psi[1 << (n - 1 - l)] = p.alpha[l]
    return psi
