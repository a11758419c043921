"""Brute-force reference implementations used to validate production paths.

Nothing here calls the state-vector kernels: operators are assembled from
Kronecker products of 2x2 matrices, chemistry is validated in a determinant
basis built directly from the integrals, and line searches use dense matrix
exponentials.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg

DENSE_CAP = 14
DENSE_MATRIX_CAP = 12
CI_ORBITAL_CAP = 6

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass
class DenseOperator:
    """Explicit operator matrix on ``n_qubits`` (dense or scipy sparse)."""

    n_qubits: int
    matrix: object

    def is_hermitian(self, tol=1e-12):
        m = self.matrix
        d = m - m.conj().T
        if scipy.sparse.issparse(d):
            return bool(abs(d).max() < tol) if d.nnz else True
        return bool(np.max(np.abs(d)) < tol) if d.size else True


def pauli_string_matrix(label, sparse=False):
    """Matrix of a label such as ``"XIZ"`` (qubit 0 leftmost, least significant)."""
    if sparse:
        # one nonzero per column: the Kronecker product entry-by-entry
        n = len(label)
        cols = np.arange(1 << n)
        rows = cols.copy()
        vals = np.ones(1 << n, dtype=np.complex128)
        for q, ch in enumerate(label):
            b = (cols >> q) & 1
            flip = ch in "XY"
            r = b ^ 1 if flip else b
            vals *= _PAULI[ch][r, b]
            if flip:
                rows ^= 1 << q
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(1 << n, 1 << n))
    kron = np.kron
    out = np.eye(1, dtype=np.complex128)
    for ch in label:
        # qubit q becomes the next more-significant factor
        m = _PAULI[ch]
        out = kron(m, out)
    return out


def matrix_of(h, sparse=None):
    """Kronecker assembly of a ``PauliSum``.

    Dense output is used up to 12 qubits by default, scipy CSR above that;
    more than 14 qubits is refused.
    """
    n = h.n_qubits
    if n > DENSE_CAP:
        raise ValueError(f"oracle cap of {DENSE_CAP} qubits exceeded")
    if sparse is None:
        sparse = n > DENSE_MATRIX_CAP
    if not sparse and n > DENSE_MATRIX_CAP:
        raise ValueError("dense matrix above 12 qubits does not fit the memory budget")
    dim = 1 << n
    acc = scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128) if sparse else np.zeros((dim, dim), dtype=np.complex128)
    for c, p in h:
        acc = acc + c * pauli_string_matrix(p.label, sparse=sparse)
    return DenseOperator(n, acc)


def exact_ground_state(h):
    """Lowest eigenpair via dense ``eigh`` (n <= 12) or Lanczos (n <= 14)."""
    op = matrix_of(h)
    m = op.matrix
    if scipy.sparse.issparse(m):
        vals, vecs = scipy.sparse.linalg.eigsh(m, k=1, which="SA", tol=1e-12)
        return float(vals[0]), vecs[:, 0]
    vals, vecs = np.linalg.eigh(m)
    return float(vals[0]), vecs[:, 0]


def embed_one_qubit(m, q, n):
    """Full matrix of a one-qubit operator ``m`` acting on qubit ``q``."""
    return np.kron(np.kron(np.eye(1 << (n - q - 1)), m), np.eye(1 << q))


def cnot_matrix(c, t, n):
    dim = 1 << n
    perm = np.arange(dim)
    on = ((perm >> c) & 1) == 1
    perm[on] = perm[on] ^ (1 << t)
    m = np.zeros((dim, dim))
    m[perm, np.arange(dim)] = 1.0
    return m


def gate_matrix(g, n):
    """Dense matrix of a ``GateOp`` built without the simulation kernels."""
    if g.kind == "u":
        return embed_one_qubit(g.matrix, g.targets[0], n)
    if g.kind == "cx":
        return cnot_matrix(g.controls[0], g.targets[0], n)
    p = pauli_string_matrix(g.pauli.label) * (1 if g.pauli.phase == 0 else -1)
    return scipy.linalg.expm(-0.5j * g.angle * p)


def circuit_state(circuit, initial=None):
    """Dense oracle: multiply gate matrices onto the initial vector."""
    n = circuit.n_qubits
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    if initial is not None:
        psi = np.asarray(initial, dtype=np.complex128).copy()
    for g in circuit.ops:
        psi = gate_matrix(g, n) @ psi
    return psi


def evolve_exact(h_of_t, psi0, total_time, steps):
    """Piecewise-constant propagation with dense ``expm`` at step midpoints."""
    psi = np.asarray(psi0, dtype=np.complex128)
    dt = total_time / steps
    for k in range(steps):
        m = matrix_of(h_of_t((k + 0.5) * dt)).matrix
        psi = scipy.linalg.expm(-1j * dt * m) @ psi
    return psi


def trace_distance_pure(a, b):
    ov = abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)
    return math.sqrt(max(0.0, 1.0 - ov))


# ---------------------------------------------------------------------------
# determinant-basis CI
# ---------------------------------------------------------------------------

def _apply_string(dets, ops):
    """Apply a product of ladder operators (rightmost first) to bitstrings.

    ``ops`` is a list of ``(spin_orbital, is_creation)``.  Returns the new
    bitstrings, signs and a validity mask.
    """
    d = dets.copy()
    sign = np.ones(d.size)
    ok = np.ones(d.size, dtype=bool)
    for p, create in reversed(ops):
        bit = np.int64(1) << p
        occ = (d & bit) != 0
        ok &= ~occ if create else occ
        below = d & (bit - 1)
        sign *= np.where(np.bitwise_count(below) & 1, -1.0, 1.0)
        d = d ^ bit
    return d, sign, ok


def ci_hamiltonian(m, n_electrons=None, max_orbitals=CI_ORBITAL_CAP):
    """Determinant-basis Hamiltonian in one particle-number sector.

    Built from the spatial integrals in chemists' notation,
    ``H = E0 + sum h_pq E_pq + 1/2 sum (pq|rs) a+_{p s} a+_{r t} a_{s t} a_{q s}``,
    by acting with ladder operators on occupation bitstrings.  Spin orbital
    ``2p + sigma`` is used, matching the interleaved qubit ordering.
    """
    norb = m.n_orbitals
    if norb > max_orbitals:
        raise ValueError(f"CI oracle cap of {max_orbitals} orbitals exceeded")
    ne = m.n_electrons if n_electrons is None else n_electrons
    nso = 2 * norb
    dets = np.array(
        sorted(sum(1 << i for i in occ) for occ in itertools.combinations(range(nso), ne)),
        dtype=np.int64,
    )
    ndet = dets.size
    pos = {int(v): i for i, v in enumerate(dets)}
    H = np.eye(ndet) * m.core_energy
    cols = np.arange(ndet)

    def add(ops, coeff):
        new, sign, ok = _apply_string(dets, ops)
        for j in np.flatnonzero(ok):
            H[pos[int(new[j])], cols[j]] += coeff * sign[j]

    for p in range(norb):
        for q in range(norb):
            c = m.one_body[p, q]
            if abs(c) < 1e-14:
                continue
            for s in (0, 1):
                add([(2 * p + s, True), (2 * q + s, False)], c)
    for p, q, r, s_ in itertools.product(range(norb), repeat=4):
        c = m.two_body[p, q, r, s_]
        if abs(c) < 1e-14:
            continue
        for s1 in (0, 1):
            for s2 in (0, 1):
                add([(2 * p + s1, True), (2 * r + s2, True), (2 * s_ + s2, False), (2 * q + s1, False)], 0.5 * c)
    return H, dets


def ci_oracle(m, n_electrons=None, max_orbitals=CI_ORBITAL_CAP):
    """Sorted eigenvalues of the CI Hamiltonian in the electron-number sector."""
    H, _ = ci_hamiltonian(m, n_electrons, max_orbitals)
    return np.linalg.eigvalsh(0.5 * (H + H.T))


def sector_spectrum(h, n_electrons):
    """Eigenvalues of a qubit Hamiltonian restricted to a particle-number sector."""
    m = matrix_of(h, sparse=True).matrix
    dim = m.shape[0]
    idx = np.array([i for i in range(dim) if int(i).bit_count() == n_electrons])
    return np.linalg.eigvalsh(m[idx][:, idx].toarray())


# ---------------------------------------------------------------------------
# one-dimensional line search
# ---------------------------------------------------------------------------

def line_search_oracle(h, state, generator, n_grid=10_000, period=2 * math.pi):
    """Minimizer of ``E(theta) = <psi|exp(-theta G) H exp(theta G)|psi>``.

    A dense grid scan over one period brackets the minimum; the root of
    ``dE/dtheta = <psi_theta|[H, G]|psi_theta>`` is then polished with
    Brent's method.  Everything uses dense matrices.
    """
    H = matrix_of(h).matrix
    G = matrix_of(generator).matrix
    psi = np.asarray(state, dtype=np.complex128)
    w, v = np.linalg.eig(G)
    vinv = np.linalg.inv(v)
    c0 = vinv @ psi
    C = H @ G - G @ H

    def phi(t):
        return v @ (np.exp(w * t) * c0)

    def energy(t):
        p = phi(t)
        return float(np.vdot(p, H @ p).real)

    def deriv(t):
        p = phi(t)
        return float(np.vdot(p, C @ p).real)

    grid = np.linspace(0.0, period, n_grid, endpoint=False)
    es = np.array([energy(t) for t in grid])
    k = int(np.argmin(es))
    step = period / n_grid
    lo, hi = grid[k] - step, grid[k] + step
    if deriv(lo) < 0 < deriv(hi):
        t = scipy.optimize.brentq(deriv, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    else:
        res = scipy.optimize.minimize_scalar(energy, bounds=(lo, hi), method="bounded",
                                             options={"xatol": 1e-12})
        t = res.x
    return float(t), energy(t)


# ---------------------------------------------------------------------------
# amplitude estimation
# ---------------------------------------------------------------------------

def ae_distribution(a, m):
    """Closed-form outcome distribution of canonical amplitude estimation.

    Returns ``{estimate: probability}`` where estimates are
    ``sin(pi k / M)**2`` for the ``M = 2**m`` phase outcomes ``k``.
    """
    M = 1 << m
    theta = math.asin(math.sqrt(min(1.0, max(0.0, a))))
    probs = np.zeros(M)
    for omega in (theta / math.pi, -theta / math.pi):
        for k in range(M):
            delta = omega - k / M
            s = np.sin(math.pi * delta)
            if abs(s) < 1e-15:
                pk = 1.0
            else:
                pk = (np.sin(M * math.pi * delta) / (M * s)) ** 2
            probs[k] += 0.5 * pk
    out = {}
    for k in range(M):
        est = round(math.sin(math.pi * k / M) ** 2, 12)
        out[est] = out.get(est, 0.0) + probs[k]
    return out


# ---------------------------------------------------------------------------
# models with closed-form answers
# ---------------------------------------------------------------------------

def tfim_ground_energy(n, j=1.0, g=1.0):
    """Ground energy of the open chain ``-j sum Z Z - g sum X`` (free fermions)."""
    # Bogoliubov-de Gennes single-particle energies of the open chain
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for i in range(n):
        A[i, i] = -2.0 * g
    for i in range(n - 1):
        A[i, i + 1] = A[i + 1, i] = -j
        B[i, i + 1] = -j
        B[i + 1, i] = j
    eps = np.linalg.svd(A - B, compute_uv=False)
    return float(-0.5 * eps.sum())


def lie_closure_dimension(generators, max_dim=None):
    """Dimension of the real Lie algebra generated by anti-Hermitian Pauli sums.

    Works on dense matrices with Gram-Schmidt orthogonalization.
    """
    mats = [matrix_of(g).matrix for g in generators]
    basis = []

    def add(m):
        v = m.ravel()
        for b in basis:
            v = v - np.vdot(b, v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-9:
            basis.append(v / nv)
            return True
        return False

    frontier = [m for m in mats if add(m)]
    dim = mats[0].shape[0] if mats else 0
    while frontier:
        new = []
        for a in frontier:
            for b_vec in list(basis):
                b = b_vec.reshape(dim, dim)
                c = a @ b - b @ a
                if add(c):
                    new.append(c)
                    if max_dim is not None and len(basis) >= max_dim:
                        return len(basis)
        frontier = new
    return len(basis)
