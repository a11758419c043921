"""Matrix-product-state emulation.

Site ``k`` carries qubit ``k`` as a tensor of shape ``(left, 2, right)``.
States are kept in mixed-canonical form: tensors left of ``center`` are
left-orthonormal and tensors right of it are right-orthonormal.  Every SVD
drops singular values below ``cutoff * s_max`` (and exact numerical zeros),
caps the bond at ``max_bond`` and adds the discarded normalized weight to
``accumulated_truncation_error``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .pauli import PauliSum, commutator
from .rng import make_rng
from .statevector import (
    Backend,
    DenseState,
    GateOp,
    SparseState,
    _measure_basis_gates,
)

DEFAULT_CUTOFF = 1e-12
DEFAULT_MAX_BOND = 256
DENSE_LIMIT = 20
ZERO_FLOOR = 1e-15

_LETTERS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_SWAP = np.eye(4, dtype=np.complex128)[[0, 2, 1, 3]]


def _svd(m):
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def _truncate(s, cutoff, max_bond):
    """Number of singular values kept and the discarded normalized weight."""
    total = float(np.dot(s, s))
    if total == 0.0:
        return 1, 0.0
    thresh = s[0] * max(cutoff, ZERO_FLOOR)
    keep = max(1, int(np.count_nonzero(s > thresh)))
    if max_bond is not None:
        keep = min(keep, int(max_bond))
    disc = float(np.dot(s[keep:], s[keep:])) / total
    return keep, disc


class MpsState:
    """Matrix product state with truncation bookkeeping.

    Attributes
    ----------
    tensors : list of ndarray
        Site tensors ``(left, 2, right)``; boundary bonds have dimension 1.
    max_bond : int or None
        Bond dimension cap ``r`` (``None`` for unbounded).
    cutoff : float
        Relative singular-value cutoff.
    center : int
        Orthogonality center.
    accumulated_truncation_error : float
        Sum of discarded squared (normalized) singular values.
    """

    def __init__(self, n_qubits, tensors, max_bond=DEFAULT_MAX_BOND, cutoff=DEFAULT_CUTOFF,
                 center=0, accumulated_truncation_error=0.0):
        if len(tensors) != n_qubits:
            raise ValueError("one tensor per site required")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        self.n_qubits = n_qubits
        self.tensors = list(tensors)
        self.max_bond = max_bond
        self.cutoff = cutoff
        self.center = center
        self.accumulated_truncation_error = accumulated_truncation_error

    @classmethod
    def basis(cls, n_qubits, index=0, **kw):
        ts = []
        for q in range(n_qubits):
            t = np.zeros((1, 2, 1), dtype=np.complex128)
            t[0, (index >> q) & 1, 0] = 1.0
            ts.append(t)
        return cls(n_qubits, ts, **kw)

    def copy(self):
        return MpsState(self.n_qubits, self.tensors, self.max_bond, self.cutoff, self.center,
                        self.accumulated_truncation_error)

    @property
    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    def norm(self):
        return float(np.linalg.norm(self.tensors[self.center]))

    # -- gauge ------------------------------------------------------------

    def move_center(self, site):
        """Shift the orthogonality center with QR steps (no truncation)."""
        ts = self.tensors
        c = self.center
        while c < site:
            a = ts[c]
            dl, _, dr = a.shape
            q, r = np.linalg.qr(a.reshape(dl * 2, dr))
            ts[c] = q.reshape(dl, 2, q.shape[1])
            ts[c + 1] = np.tensordot(r, ts[c + 1], axes=(1, 0))
            c += 1
        while c > site:
            a = ts[c]
            dl, _, dr = a.shape
            q, r = np.linalg.qr(a.reshape(dl, 2 * dr).T)
            ts[c] = q.T.reshape(q.shape[1], 2, dr)
            ts[c - 1] = np.tensordot(ts[c - 1], r.T, axes=(2, 0))
            c -= 1
        self.center = c
        return self

    def to_dense(self):
        n = self.n_qubits
        if n > 24:
            raise ValueError("dense conversion limited to 24 qubits")
        v = self.tensors[0].reshape(2, -1)
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=(1, 0)).reshape(-1, t.shape[2])
        # C-order flattening puts site 0 most significant; reverse the axes
        return v.reshape((2,) * n).transpose(tuple(range(n - 1, -1, -1))).reshape(-1)


def mps_from_dense(state, cutoff=DEFAULT_CUTOFF, max_bond=DEFAULT_MAX_BOND, dense_limit=DENSE_LIMIT):
    """Left-to-right SVD factorization of a state vector.

    Parameters
    ----------
    state : DenseState, SparseState or array
    cutoff : float
        Relative singular-value cutoff.
    max_bond : int or None
    dense_limit : int
        Largest accepted qubit count.
    """
    if isinstance(state, (DenseState, SparseState)):
        vec = state.to_dense() if state.n_qubits <= dense_limit else None
        n = state.n_qubits
    else:
        vec = np.asarray(state, dtype=np.complex128)
        n = int(vec.size).bit_length() - 1
    if n > dense_limit or vec is None:
        raise ValueError(f"dense conversion limited to {dense_limit} qubits")
    psi = vec.reshape((2,) * n).transpose(tuple(range(n - 1, -1, -1))).reshape(-1)
    nrm = np.linalg.norm(psi)
    psi = psi / nrm
    tensors, err = [], 0.0
    rest = psi.reshape(1, -1)
    for k in range(n - 1):
        dl = rest.shape[0]
        m = rest.reshape(dl * 2, -1)
        u, s, vh = _svd(m)
        keep, disc = _truncate(s, cutoff, max_bond)
        err += disc
        s = s[:keep] * (np.linalg.norm(s) / np.linalg.norm(s[:keep]))
        tensors.append(u[:, :keep].reshape(dl, 2, keep))
        rest = s[:, None] * vh[:keep]
    tensors.append(rest.reshape(rest.shape[0], 2, 1) * nrm)
    return MpsState(n, tensors, max_bond, cutoff, center=n - 1, accumulated_truncation_error=err)


# ---------------------------------------------------------------------------
# gates
# ---------------------------------------------------------------------------

def _apply_one(st, q, m):
    st.tensors[q] = np.einsum("st,atb->asb", m, st.tensors[q])


def _apply_adjacent(st, i, u4):
    """Two-site update on sites ``(i, i+1)``; ``u4`` is indexed ``2 s_i + s_{i+1}``."""
    st.move_center(i)
    a, b = st.tensors[i], st.tensors[i + 1]
    dl, dr = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=(2, 0))
    theta = np.einsum("stuv,auvc->astc", u4.reshape(2, 2, 2, 2), theta)
    u, s, vh = _svd(theta.reshape(dl * 2, 2 * dr))
    keep, disc = _truncate(s, st.cutoff, st.max_bond)
    st.accumulated_truncation_error += disc
    s = s[:keep] * (np.linalg.norm(s) / np.linalg.norm(s[:keep]))
    st.tensors[i] = u[:, :keep].reshape(dl, 2, keep)
    st.tensors[i + 1] = (s[:, None] * vh[:keep]).reshape(keep, 2, dr)
    st.center = i + 1


def _cnot4(control_first):
    m = np.eye(4, dtype=np.complex128)
    if control_first:
        m[[2, 3]] = m[[3, 2]]
    else:
        m[[1, 3]] = m[[3, 1]]
    return m


def apply_two_qubit_gate(state, q0, q1, u4):
    """Apply a 4x4 unitary on qubits ``(q0, q1)``, indexed ``2 s_q0 + s_q1``.

    Non-adjacent pairs are routed by swapping ``q0`` next to ``q1`` and
    swapping back afterwards.
    """
    st = state.copy()
    if q0 == q1:
        raise ValueError("two-qubit gate needs distinct qubits")
    if q0 > q1:
        # reorder so the lower site comes first
        u4 = _SWAP @ u4 @ _SWAP
        q0, q1 = q1, q0
    path = list(range(q0, q1 - 1))
    for k in path:
        _apply_adjacent(st, k, _SWAP)
    _apply_adjacent(st, q1 - 1, u4)
    for k in reversed(path):
        _apply_adjacent(st, k, _SWAP)
    return st


def _rotation_mpo(p, angle):
    """Bond-2 MPO of ``exp(-i angle/2 P)`` over the span of ``P``."""
    sup = p.support
    lo, hi = sup[0], sup[-1]
    sign = 1.0 if p.phase == 0 else -1.0
    c, s = np.cos(angle / 2), -1j * np.sin(angle / 2) * sign
    label = p.label
    if lo == hi:
        return lo, [(c * _LETTERS["I"] + s * _LETTERS[label[lo]])[None, :, :, None]]
    ws = []
    for k in range(lo, hi + 1):
        L = _LETTERS[label[k]]
        if k == lo:
            w = np.zeros((1, 2, 2, 2), dtype=np.complex128)
            w[0, :, :, 0] = c * _LETTERS["I"]
            w[0, :, :, 1] = s * L
        elif k == hi:
            w = np.zeros((2, 2, 2, 1), dtype=np.complex128)
            w[0, :, :, 0] = _LETTERS["I"]
            w[1, :, :, 0] = L
        else:
            w = np.zeros((2, 2, 2, 2), dtype=np.complex128)
            w[0, :, :, 0] = _LETTERS["I"]
            w[1, :, :, 1] = L
        ws.append(w)
    return lo, ws


def _apply_mpo_span(st, lo, ws):
    """Apply MPO tensors on sites ``lo..lo+len(ws)-1`` and recompress."""
    hi = lo + len(ws) - 1
    st.move_center(lo)
    for k, w in zip(range(lo, hi + 1), ws):
        a = st.tensors[k]
        t = np.einsum("wstv,atb->awsbv", w, a)
        dl, dw, _, dr, dv = t.shape
        st.tensors[k] = t.reshape(dl * dw, 2, dr * dv)
    if hi == lo:
        return st
    # left sweep restores orthonormality, right-to-left SVD sweep truncates
    st.center = lo
    st.move_center(hi)
    for k in range(hi, lo, -1):
        a = st.tensors[k]
        dl, _, dr = a.shape
        u, s, vh = _svd(a.reshape(dl, 2 * dr))
        keep, disc = _truncate(s, st.cutoff, st.max_bond)
        st.accumulated_truncation_error += disc
        s = s[:keep] * (np.linalg.norm(s) / np.linalg.norm(s[:keep]))
        st.tensors[k] = vh[:keep].reshape(keep, 2, dr)
        st.tensors[k - 1] = np.tensordot(st.tensors[k - 1], u[:, :keep] * s, axes=(2, 0))
        st.center = k - 1
    return st


def apply_gate(state, g):
    """Return ``U state`` as a new ``MpsState``."""
    for q in g.qubits:
        if not 0 <= q < state.n_qubits:
            raise ValueError(f"qubit {q} out of range")
    if g.kind == "u":
        st = state.copy()
        _apply_one(st, g.targets[0], g.matrix)
        return st
    if g.kind == "cx":
        return apply_two_qubit_gate(state, g.controls[0], g.targets[0], _cnot4(True))
    if g.pauli.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")
    if g.pauli.x == 0 and g.pauli.z == 0:
        st = state.copy()
        sign = 1.0 if g.pauli.phase == 0 else -1.0
        st.tensors[st.center] = st.tensors[st.center] * np.exp(-0.5j * g.angle * sign)
        return st
    lo, ws = _rotation_mpo(g.pauli, g.angle)
    return _apply_mpo_span(state.copy(), lo, ws)


def apply_circuit(state, circuit):
    for g in circuit.ops:
        state = apply_gate(state, g)
    return state


def apply_generator(state, generator, theta):
    """``exp(theta G)`` for anti-Hermitian ``G`` with commuting strings."""
    if not generator.commuting_strings():
        raise ValueError("generator strings must commute for an exact exponential")
    for c, p in generator:
        if abs(c.real) > 1e-12:
            raise ValueError("generator must be anti-Hermitian")
        state = apply_gate(state, GateOp("rot", pauli=p, angle=-2.0 * theta * c.imag))
    return state


# ---------------------------------------------------------------------------
# matrix product operators
# ---------------------------------------------------------------------------

class Mpo:
    """Matrix product operator with site tensors ``(left, out, in, right)``.

    ``error_bound`` is a certified bound on the operator (spectral) norm of
    the difference to the exact operator, accumulated by compression.
    """

    def __init__(self, n_qubits, tensors, hermitian=False, error_bound=0.0, n_terms=0):
        self.n_qubits = n_qubits
        self.tensors = list(tensors)
        self.hermitian = hermitian
        self.error_bound = error_bound
        self.n_terms = n_terms

    @property
    def bond_dims(self):
        return [w.shape[3] for w in self.tensors[:-1]]

    @property
    def max_bond(self):
        return max(self.bond_dims, default=1)

    def to_dense(self):
        """Full matrix (small widths only); row index bit ``q`` is qubit ``q``."""
        n = self.n_qubits
        if n > 12:
            raise ValueError("dense conversion limited to 12 qubits")
        acc = self.tensors[0][0]
        for w in self.tensors[1:]:
            # the new site becomes the most significant bit
            t = np.einsum("abr,rstv->satbv", acc, w)
            d = t.shape[0] * t.shape[1]
            acc = t.reshape(d, d, t.shape[4])
        return acc[:, :, 0]


def _prefix_state(first, last, b, ops):
    """Automaton channel of one term at bond ``b`` (``b`` sites to the left)."""
    if b <= first:
        return "N"
    if b > last:
        return "F"
    return ops[first:b]


def mpo_from_pauli_sum(h, compress=None, tol=1e-12):
    """Exact MPO of a ``PauliSum`` built from a prefix-sharing automaton.

    Each bond carries a "not started" channel, a "finished" channel and one
    channel per distinct open operator prefix; channels that no term uses
    are dropped, so the bond dimension never exceeds the number of terms.
    Coefficients are attached where a term ends.

    Parameters
    ----------
    compress : bool, optional
        Run SVD compression; defaults to ``True`` for 1000 or more terms.
    tol : float
        Relative singular-value threshold for compression.
    """
    n = h.n_qubits
    if compress is None:
        compress = len(h) >= 1000
    if len(h) == 0:
        ts = [np.zeros((1, 2, 2, 1), dtype=np.complex128) for _ in range(n)]
        return Mpo(n, ts, hermitian=True)
    labels = [p.label for _, p in h]
    coeffs = h.coeffs
    spans = []
    for lab in labels:
        sup = [k for k, ch in enumerate(lab) if ch != "I"]
        spans.append((sup[0], sup[-1]) if sup else (0, 0))
    channels = []
    for b in range(n + 1):
        chans = {}
        for t, lab in enumerate(labels):
            key = _prefix_state(spans[t][0], spans[t][1], b, lab)
            if key not in chans:
                chans[key] = len(chans)
        channels.append(chans)
    tensors = []
    for k in range(n):
        left, right = channels[k], channels[k + 1]
        w = np.zeros((len(left), 2, 2, len(right)), dtype=np.complex128)
        done = set()
        for t, lab in enumerate(labels):
            first, last = spans[t]
            lk = _prefix_state(first, last, k, lab)
            rk = _prefix_state(first, last, k + 1, lab)
            i, j = left[lk], right[rk]
            if rk == "F" and lk != "F":
                w[i, :, :, j] += coeffs[t] * _LETTERS[lab[k]]
            elif (i, j) not in done:
                w[i, :, :, j] = _LETTERS[lab[k]] if lk != "N" or rk != "N" else _LETTERS["I"]
                done.add((i, j))
        tensors.append(w)
    mpo = Mpo(n, tensors, hermitian=h.is_hermitian(), n_terms=len(h))
    if compress:
        mpo = compress_mpo(mpo, tol)
    return mpo


def compress_mpo(mpo, tol=1e-12):
    """SVD compression with a certified error bound.

    A QR sweep makes every tensor left-orthonormal in the Frobenius inner
    product; a right-to-left SVD sweep then truncates each bond.  The
    Frobenius norm of the change is at most the sum over bonds of the root
    of the discarded squared singular values, which bounds the spectral
    norm of the error.
    """
    ts = [w.copy() for w in mpo.tensors]
    n = len(ts)
    for k in range(n - 1):
        dl, o, i, dr = ts[k].shape
        q, r = np.linalg.qr(ts[k].reshape(dl * o * i, dr))
        ts[k] = q.reshape(dl, o, i, q.shape[1])
        ts[k + 1] = np.tensordot(r, ts[k + 1], axes=(1, 0))
    bound = 0.0
    for k in range(n - 1, 0, -1):
        dl, o, i, dr = ts[k].shape
        u, s, vh = _svd(ts[k].reshape(dl, o * i * dr))
        if s.size == 0 or s[0] == 0:
            keep = 1
        else:
            keep = max(1, int(np.count_nonzero(s > tol * s[0])))
        bound += float(np.sqrt(np.dot(s[keep:], s[keep:])))
        ts[k] = vh[:keep].reshape(keep, o, i, dr)
        ts[k - 1] = np.tensordot(ts[k - 1], u[:, :keep] * s[:keep], axes=(3, 0))
    return Mpo(mpo.n_qubits, ts, mpo.hermitian, mpo.error_bound + bound, mpo.n_terms)


def _as_mpo(h):
    if isinstance(h, Mpo):
        return h
    cached = h._cache.get("mpo")
    if cached is None:
        cached = mpo_from_pauli_sum(h)
        h._cache["mpo"] = cached
    return cached


def mps_expectation(state, h):
    """``<psi|H|psi>`` by exact contraction of the MPS/MPO network.

    Parameters
    ----------
    h : Mpo or PauliSum
    """
    if h.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")
    mpo = _as_mpo(h)
    env = np.ones((1, 1, 1), dtype=np.complex128)
    for a, w in zip(state.tensors, mpo.tensors):
        # env[bra, mpo, ket]
        t = np.tensordot(env, a, axes=(2, 0))                 # (b, w, t, d)
        t = np.tensordot(t, w, axes=([1, 2], [0, 2]))         # (b, d, s, q)
        t = np.tensordot(a.conj(), t, axes=([0, 1], [0, 2]))  # (c, d, q)
        env = t.transpose(0, 2, 1)
    val = complex(env[0, 0, 0])
    nrm = state.norm() ** 2
    return val.real / nrm


def mps_inner(a, b):
    """``<a|b>``."""
    env = np.ones((1, 1), dtype=np.complex128)
    for x, y in zip(a.tensors, b.tensors):
        env = np.tensordot(env, y, axes=(1, 0))
        env = np.tensordot(x.conj(), env, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def fidelity(a, b):
    return abs(mps_inner(a, b)) ** 2 / (mps_inner(a, a).real * mps_inner(b, b).real)


def term_expectations(state, h):
    """Per-term ``<psi|P_t|psi>`` for the canonical strings of ``h``."""
    if h.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")
    st = state.copy()
    st.move_center(0)
    ts = st.tensors
    nrm = st.norm() ** 2
    # with the center at 0 every site right of a string's span contracts to identity
    left = [np.ones((1, 1), dtype=np.complex128)]
    for a in ts:
        e = np.tensordot(left[-1], a, axes=(1, 0))
        left.append(np.tensordot(a.conj(), e, axes=([0, 1], [0, 1])))
    out = np.empty(len(h), dtype=np.complex128)
    for t, (_, p) in enumerate(h):
        sup = p.support
        if not sup:
            out[t] = nrm
            continue
        lab = p.label
        env = left[sup[0]]
        for k in range(sup[0], sup[-1] + 1):
            a = ts[k]
            e = np.tensordot(env, a, axes=(1, 0))
            if lab[k] != "I":
                e = np.tensordot(e, _LETTERS[lab[k]], axes=(1, 1)).transpose(0, 2, 1)
            env = np.tensordot(a.conj(), e, axes=([0, 1], [0, 1]))
        out[t] = np.trace(env)
    return out / nrm


def sample(state, shots, seed, stream="sample"):
    """Perfect sampling from the Born distribution, one site at a time."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    st = state.copy()
    st.move_center(0)
    rng = make_rng(seed, stream)
    u = rng.random((st.n_qubits, shots))
    env = np.ones((shots, 1), dtype=np.complex128)
    idx = np.zeros(shots, dtype=np.int64)
    for k, a in enumerate(st.tensors):
        v = np.einsum("ra,asb->rsb", env, a)
        p = np.sum(np.abs(v) ** 2, axis=2)
        p1 = p[:, 1] / (p[:, 0] + p[:, 1])
        bit = (u[k] < p1).astype(np.int64)
        idx |= bit << k
        env = v[np.arange(shots), bit]
        env /= np.linalg.norm(env, axis=1, keepdims=True)
    vals, counts = np.unique(idx, return_counts=True)
    return {int(i): int(c) for i, c in zip(vals, counts)}


def sampled_expectation(state, h, shots_per_term, seed):
    """Shot-noise estimate of ``<h>``, measuring each term separately."""
    if not h.is_hermitian():
        raise ValueError("expectation requires a Hermitian operator")
    total = 0.0
    for t, (c, p) in enumerate(h):
        if p.x == 0 and p.z == 0:
            total += c.real
            continue
        rotated = state
        for g in _measure_basis_gates(p):
            rotated = apply_gate(rotated, g)
        hist = sample(rotated, shots_per_term, seed, stream=("term", t))
        mask = p.x | p.z
        s = sum(cnt * (-1 if (k & mask).bit_count() & 1 else 1) for k, cnt in hist.items())
        total += c.real * s / shots_per_term
    return float(total)


def dump_mps(state):
    """Per-site shape header followed by flattened values in dump format."""
    lines = []
    for k, t in enumerate(state.tensors):
        lines.append(f"# site {k} shape {t.shape[0]} {t.shape[1]} {t.shape[2]}")
        flat = t.reshape(-1)
        lines.extend(f"{i}\t{v.real:.17g}\t{v.imag:.17g}" for i, v in enumerate(flat.tolist()))
    return "\n".join(lines) + "\n"


class MpsBackend(Backend):
    """MPS backend; gradients use commutator expectations."""

    name = "mps"
    supports_adjoint = False

    def __init__(self, max_bond=DEFAULT_MAX_BOND, cutoff=DEFAULT_CUTOFF):
        self.max_bond = max_bond
        self.cutoff = cutoff

    def basis_state(self, n_qubits, index=0):
        return MpsState.basis(n_qubits, index, max_bond=self.max_bond, cutoff=self.cutoff)

    def from_dense(self, vec):
        return mps_from_dense(vec, cutoff=self.cutoff, max_bond=self.max_bond)

    def apply_gate(self, state, g):
        return apply_gate(state, g)

    def apply_generator(self, state, generator, theta):
        return apply_generator(state, generator, theta)

    def apply_pauli_sum(self, state, h):
        raise NotImplementedError("the MPS backend does not form H|psi>")

    def expectation(self, state, h):
        if isinstance(h, PauliSum) and not h.is_hermitian():
            raise ValueError("expectation requires a Hermitian operator")
        return mps_expectation(state, h)

    def term_expectations(self, state, h):
        return term_expectations(state, h)

    def inner(self, a, b):
        return mps_inner(a, b)

    def to_dense(self, state):
        return state.to_dense()

    def sample(self, state, shots, seed):
        return sample(state, shots, seed)

    def sampled_expectation(self, state, h, shots, seed):
        return sampled_expectation(state, h, shots, seed)

    def gradients(self, state, h, generators):
        comms = [commutator(h, g) for g in generators]
        batch = [c for c in comms if len(c)]
        out = np.zeros(len(generators))
        if not batch:
            return out
        merged = PauliSum(h.n_qubits, np.concatenate([c.xs for c in batch]),
                          np.concatenate([c.zs for c in batch]),
                          np.ones(sum(len(c) for c in batch)))
        vals = dict(zip(zip(merged.xs.tolist(), merged.zs.tolist()),
                        term_expectations(state, merged).tolist()))
        for k, c in enumerate(comms):
            if len(c):
                ev = np.array([vals[(x, z)] for x, z in zip(c.xs.tolist(), c.zs.tolist())])
                out[k] = float(np.real(np.einsum("i,i->", c.coeffs, ev)))
        return out
