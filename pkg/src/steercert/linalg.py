"""Dense complex linear algebra kernel.

All matrices are plain ``numpy`` arrays of dtype complex128.  Party order in
every tensor product is fixed: the trusted party (Alice) sits in slot 0,
followed by the untrusted parties in index order.
"""

from functools import reduce

import numpy as np

from .exceptions import DimensionError, NotHermitianError, NotUnitaryError

TOL = 1e-9


def omega(d):
    return np.exp(2j * np.pi / d)


def _check_dim(d):
    if int(d) != d or d < 2:
        raise DimensionError(f"local dimension must be an integer >= 2, got {d!r}")
    return int(d)


def gen_pauli_z(d):
    """Clock matrix diag(1, w, ..., w^(d-1)) with w = exp(2 pi i / d)."""
    d = _check_dim(d)
    ph = np.exp(2j * np.pi * np.arange(d) / d)
    # exact zeros for the real/imaginary parts of +-1, +-i
    ph.real[np.abs(ph.real) < 1e-15] = 0
    ph.imag[np.abs(ph.imag) < 1e-15] = 0
    return np.diag(ph)


def gen_pauli_x(d):
    """Shift matrix sending |i> to |i+1 mod d>."""
    d = _check_dim(d)
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def kron(factors):
    """Kronecker product of ``factors`` in the given order."""
    factors = list(factors)
    if not factors:
        raise ValueError("kron needs at least one factor")
    return reduce(np.kron, (np.asarray(f, dtype=complex) for f in factors))


def max_norm(a):
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


def is_unitary(u, tol=1e-10):
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return max_norm(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def is_hermitian(h, tol=1e-10):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return max_norm(h - h.conj().T) <= tol


def dagger(a):
    return np.asarray(a).conj().T


def mat_power(u, k, tol=TOL):
    """Integer power of a unitary; negative ``k`` uses the adjoint."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        raise NotUnitaryError("mat_power expects a unitary matrix")
    k = int(k)
    if k < 0:
        return np.linalg.matrix_power(u.conj().T, -k)
    return np.linalg.matrix_power(u, k)


def hermitize(o):
    """Return O + O^dagger."""
    o = np.asarray(o, dtype=complex)
    if o.ndim != 2 or o.shape[0] != o.shape[1]:
        raise DimensionError(f"hermitize needs a square matrix, got shape {o.shape}")
    return o + o.conj().T


def max_eigenvalue(h, tol=TOL):
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, tol):
        raise NotHermitianError("max_eigenvalue expects a Hermitian matrix")
    return float(np.linalg.eigvalsh((h + h.conj().T) / 2)[-1])


def partial_trace(rho, dims, keep):
    """Reduced density matrix of ``rho`` on the subsystems listed in ``keep``.

    The kept subsystems stay in their original relative order.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = [int(x) for x in dims]
    n = len(dims)
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise DimensionError(f"rho has shape {rho.shape}, dims {dims} need ({total}, {total})")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must be a non-empty index set")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    t = rho.reshape(dims + dims)
    # einsum with integer sublists: kept indices get fresh bra labels
    ket = list(range(n))
    bra = [i + n if i in keep else i for i in range(n)]
    out = keep + [k + n for k in keep]
    red = np.einsum(t, ket + bra, out)
    kd = int(np.prod([dims[k] for k in keep]))
    return red.reshape(kd, kd)


def fidelity(rho, psi):
    """<psi| rho |psi> for a density matrix and a pure reference state."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex).ravel()
    if rho.shape != (psi.size, psi.size):
        raise DimensionError(f"rho shape {rho.shape} does not match state of size {psi.size}")
    val = float(np.real(psi.conj() @ rho @ psi))
    return min(1.0, max(0.0, val))


def proj(psi):
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def normalize_phase(v, tol=1e-12):
    """Rotate the global phase so the first non-negligible entry is real positive."""
    v = np.asarray(v, dtype=complex)
    flat = v.ravel()
    idx = np.flatnonzero(np.abs(flat) > tol)
    if idx.size == 0:
        return v
    ph = flat[idx[0]] / abs(flat[idx[0]])
    return v / ph


def random_unitary(n, rng):
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_state(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
