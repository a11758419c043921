"""Dense and sparse state-vector emulation.

Dense states hold all ``2**n`` amplitudes.  Sparse states hold a sorted
``int64`` index array and the matching complex amplitudes; amplitudes with
magnitude below ``SPARSE_THRESHOLD`` are dropped after every operation.
Sparse operations touch only stored entries and never build the dense
vector.

Basis index bit ``q`` is the computational value of qubit ``q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .pauli import PauliString, PauliSum, commutator, _pc
from .rng import make_rng

SPARSE_THRESHOLD = 1e-14
UNITARY_TOL = 1e-12
_K = kernels.impl


# ---------------------------------------------------------------------------
# gates and circuits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateOp:
    """One gate.

    ``kind`` is ``"u"`` (2x2 unitary on ``targets[0]``), ``"cx"``
    (control ``controls[0]``, target ``targets[0]``) or ``"rot"``
    (``exp(-i angle/2 P)`` for the Hermitian Pauli string ``pauli``).
    """

    kind: str
    targets: tuple = ()
    controls: tuple = ()
    matrix: np.ndarray | None = None
    pauli: PauliString | None = None
    angle: float = 0.0
    name: str = ""
    params: tuple = ()

    def __post_init__(self):
        if self.kind == "u":
            m = np.asarray(self.matrix, dtype=np.complex128)
            if m.shape != (2, 2):
                raise ValueError("single-qubit gate needs a 2x2 matrix")
            if not np.allclose(m.conj().T @ m, np.eye(2), atol=UNITARY_TOL, rtol=0):
                raise ValueError("matrix is not unitary")
            object.__setattr__(self, "matrix", m)
        elif self.kind == "cx":
            if self.controls[0] == self.targets[0]:
                raise ValueError("control equals target")
        elif self.kind == "rot":
            if self.pauli.phase % 2:
                raise ValueError("rotation generator must be Hermitian")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @property
    def qubits(self):
        if self.kind == "rot":
            return self.pauli.support
        return tuple(self.controls) + tuple(self.targets)

    def inverse(self):
        if self.kind == "u":
            return GateOp("u", self.targets, matrix=self.matrix.conj().T, name=self.name + "_dg")
        if self.kind == "cx":
            return self
        return GateOp("rot", pauli=self.pauli, angle=-self.angle, name=self.name)


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_FIXED = {
    "id": np.eye(2),
    "x": np.array([[0, 1], [1, 0]]),
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.diag([1, -1]),
    "h": _H,
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
    "t": np.diag([1, np.exp(1j * math.pi / 4)]),
    "tdg": np.diag([1, np.exp(-1j * math.pi / 4)]),
}


def u3_matrix(theta, phi, lam):
    """OpenQASM ``u3`` matrix."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=np.complex128,
    )


def rx_matrix(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry_matrix(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def gate(name, *qubits, params=()):
    """Build a named gate: fixed one-qubit gates, rx/ry/rz/u1/u2/u3, cx."""
    name = name.lower()
    if name in ("cx", "cnot"):
        return GateOp("cx", targets=(qubits[1],), controls=(qubits[0],), name="cx")
    if name in _FIXED:
        m = _FIXED[name]
    elif name == "rx":
        m = rx_matrix(*params)
    elif name == "ry":
        m = ry_matrix(*params)
    elif name == "rz":
        m = rz_matrix(*params)
    elif name in ("u3", "u"):
        m = u3_matrix(*params)
    elif name == "u2":
        m = u3_matrix(math.pi / 2, *params)
    elif name in ("u1", "p"):
        m = u3_matrix(0.0, 0.0, *params)
    else:
        raise ValueError(f"unsupported gate {name!r}")
    return GateOp("u", targets=(qubits[0],), matrix=m, name=name, params=tuple(float(v) for v in params))


def pauli_rotation(p, angle):
    """``exp(-i angle/2 P)`` for a Pauli string or label."""
    if isinstance(p, str):
        p = PauliString.from_label(p)
    return GateOp("rot", pauli=p, angle=float(angle), name="rot")


@dataclass
class Circuit:
    """Ordered gate list on ``n_qubits``."""

    n_qubits: int
    ops: list = field(default_factory=list)

    def append(self, op):
        for q in op.qubits:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"qubit {q} out of range")
        self.ops.append(op)
        return self

    def inverse(self):
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.ops)])

    def __len__(self):
        return len(self.ops)


def random_unitary_2x2(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_circuit(n_qubits, n_gates, seed, rotations=True):
    """Random mix of one-qubit unitaries, CNOTs (any pair) and Pauli rotations."""
    rng = make_rng(seed, "random_circuit")
    c = Circuit(n_qubits)
    for _ in range(n_gates):
        r = rng.random()
        if n_qubits >= 2 and r < 0.35:
            a, b = rng.choice(n_qubits, size=2, replace=False)
            c.append(GateOp("cx", targets=(int(b),), controls=(int(a),)))
        elif rotations and r < 0.55:
            w = int(rng.integers(1, min(4, n_qubits) + 1))
            qs = rng.choice(n_qubits, size=w, replace=False)
            label = ["I"] * n_qubits
            for q in qs:
                label[q] = "XYZ"[int(rng.integers(3))]
            c.append(pauli_rotation("".join(label), rng.uniform(-math.pi, math.pi)))
        else:
            q = int(rng.integers(n_qubits))
            c.append(GateOp("u", targets=(q,), matrix=random_unitary_2x2(rng)))
    return c


# ---------------------------------------------------------------------------
# state containers
# ---------------------------------------------------------------------------

class DenseState:
    """All ``2**n`` amplitudes of an ``n``-qubit state."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits, amplitudes):
        amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << n_qubits,):
            raise ValueError("amplitude vector has the wrong length")
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, n_qubits, index=0):
        a = np.zeros(1 << n_qubits, dtype=np.complex128)
        a[index] = 1.0
        return cls(n_qubits, a)

    def copy(self):
        return DenseState(self.n_qubits, self.amplitudes.copy())

    def to_dense(self):
        return self.amplitudes

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    @property
    def nnz(self):
        return int(np.count_nonzero(np.abs(self.amplitudes) >= SPARSE_THRESHOLD))


class SparseState:
    """Sorted basis indices with their amplitudes.

    The object is treated as immutable; operations return new states and
    may share the index array with their input.
    """

    __slots__ = ("n_qubits", "indices", "values", "_table", "_cache")

    def __init__(self, n_qubits, indices, values, trusted=False):
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        values = np.ascontiguousarray(values, dtype=np.complex128)
        if not trusted:
            order = np.argsort(indices, kind="stable")
            indices, values = indices[order], values[order]
            if indices.size and (np.any(indices[1:] == indices[:-1])):
                raise ValueError("duplicate basis indices")
            keep = np.abs(values) >= SPARSE_THRESHOLD
            if not keep.all():
                indices, values = indices[keep], values[keep]
            if indices.size and (indices[0] < 0 or indices[-1] >= (1 << n_qubits)):
                raise ValueError("basis index out of range")
        self.n_qubits = n_qubits
        self.indices = indices
        self.values = values
        self._table = None
        self._cache = {}

    @classmethod
    def basis(cls, n_qubits, index=0):
        return cls(n_qubits, np.array([index]), np.array([1.0 + 0j]), trusted=True)

    @classmethod
    def from_dense(cls, vec, n_qubits=None):
        vec = np.asarray(vec, dtype=np.complex128)
        if n_qubits is None:
            n_qubits = int(vec.size).bit_length() - 1
        nz = np.flatnonzero(np.abs(vec) >= SPARSE_THRESHOLD)
        return cls(n_qubits, nz, vec[nz], trusted=True)

    @classmethod
    def from_entries(cls, n_qubits, entries):
        items = sorted(entries.items())
        return cls(n_qubits, [k for k, _ in items], [v for _, v in items])

    @property
    def nnz(self):
        return int(self.indices.size)

    @property
    def full(self):
        return self.indices.size == (1 << self.n_qubits)

    @property
    def entries(self):
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def table(self):
        """Lookup structure for the active kernels (built lazily)."""
        if self._table is None:
            if self.full:
                self._table = np.zeros(0, dtype=np.int32)
            else:
                self._table = _K.build_table(self.indices)
        return self._table

    def positions(self, keys):
        keys = np.ascontiguousarray(keys, dtype=np.int64)
        if self.full:
            return keys.copy()
        return _K.lookup(self.indices, self.table(), keys)

    def to_dense(self):
        out = np.zeros(1 << self.n_qubits, dtype=np.complex128)
        out[self.indices] = self.values
        return out

    def norm(self):
        return float(np.linalg.norm(self.values))

    def copy(self):
        return self


def _mask_u64(v):
    return np.uint64(int(v))


def _new_sparse(n, idx, vals):
    keep = np.abs(vals) >= SPARSE_THRESHOLD
    if not keep.all():
        idx, vals = idx[keep], vals[keep]
    return SparseState(n, idx, vals, trusted=True)


# ---------------------------------------------------------------------------
# gate application
# ---------------------------------------------------------------------------

def _check_qubits(state, g):
    for q in g.qubits:
        if not 0 <= q < state.n_qubits:
            raise ValueError(f"qubit {q} out of range")
    if g.kind == "rot" and g.pauli.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")


def _rotation_factors(p, angle):
    """(a, b) with exp(-i angle/2 P) = a I + b R(x, z)."""
    sign = 1.0 if p.phase == 0 else -1.0
    ny = (p.x & p.z).bit_count() % 4
    half = 0.5 * angle * sign
    return math.cos(half), -1j * math.sin(half) * (1j) ** ny


def apply_gate(state, g):
    """Return ``U state`` as a new state of the same representation."""
    _check_qubits(state, g)
    if isinstance(state, DenseState):
        return _dense_gate(state, g)
    if isinstance(state, SparseState):
        return _sparse_gate(state, g)
    raise TypeError("unsupported state type")


def apply_circuit(state, circuit):
    for g in circuit.ops:
        state = apply_gate(state, g)
    return state


def _dense_gate(state, g):
    n = state.n_qubits
    psi = state.amplitudes
    if g.kind == "u":
        t = g.targets[0]
        v = psi.reshape(-1, 2, 1 << t)
        out = np.einsum("ab,ibj->iaj", g.matrix, v).reshape(-1)
        return DenseState(n, out)
    if g.kind == "cx":
        c, t = g.controls[0], g.targets[0]
        out = psi.copy()
        j = np.arange(psi.size)
        sel = j[((j >> c) & 1 == 1) & ((j >> t) & 1 == 0)]
        out[sel], out[sel | (1 << t)] = psi[sel | (1 << t)], psi[sel]
        return DenseState(n, out)
    out = psi.copy()
    a, b = _rotation_factors(g.pauli, g.angle)
    _K.dense_pauli_rotation(out, _mask_u64(g.pauli.x), _mask_u64(g.pauli.z), a, complex(b))
    return DenseState(n, out)


def _sparse_gate(state, g):
    n = state.n_qubits
    idx, vals = state.indices, state.values
    if g.kind == "cx":
        c, t = g.controls[0], g.targets[0]
        new = idx ^ (((idx >> c) & 1) << t)
        order = np.argsort(new, kind="stable")
        return SparseState(n, new[order], vals[order], trusted=True)
    if g.kind == "u":
        t = g.targets[0]
        m = g.matrix
        bit = np.int64(1 << t)
        b = (idx >> t) & 1
        if m[0, 1] == 0 and m[1, 0] == 0:
            return _new_sparse(n, idx, vals * m[b, b])
        if m[0, 0] == 0 and m[1, 1] == 0:
            new = idx ^ bit
            nv = vals * m[1 - b, b]
            order = np.argsort(new, kind="stable")
            return _new_sparse(n, new[order], nv[order])
        new_idx = _union_with_partners(state, bit)
        nb = (new_idx >> t) & 1
        p = state.positions(new_idx)
        q = state.positions(new_idx ^ bit)
        out = np.zeros(new_idx.size, dtype=np.complex128)
        hp = p >= 0
        out[hp] = m[nb[hp], nb[hp]] * vals[p[hp]]
        hq = q >= 0
        out[hq] += m[nb[hq], 1 - nb[hq]] * vals[q[hq]]
        return _new_sparse(n, new_idx, out)
    return sparse_pauli_rotation(state, g.pauli, g.angle)


def _union_with_partners(state, x):
    """Sorted union of the support and the support XOR ``x``."""
    idx = state.indices
    if state.full:
        return idx
    keys = idx ^ np.int64(x)
    pos = state.positions(keys)
    missing = keys[pos < 0]
    if missing.size == 0:
        return idx
    return np.sort(np.concatenate((idx, missing)))


def sparse_pauli_rotation(state, p, angle):
    """Exact ``exp(-i angle/2 P)`` on a sparse state (pairwise XOR mixing)."""
    a, b = _rotation_factors(p, angle)
    n = state.n_qubits
    if p.x == 0:
        sign = np.where(_pc(state.indices.view(np.uint64) & np.uint64(p.z)) & 1, -1.0, 1.0)
        return _new_sparse(n, state.indices, state.values * (a + b * sign))
    new_idx = _union_with_partners(state, p.x)
    out = _K.sparse_gather_mix(new_idx, state.indices, state.values, state.table(), state.full,
                               _mask_u64(p.x), _mask_u64(p.z), a, complex(b))
    return _new_sparse(n, new_idx, out)


def apply_pauli_rotation(state, p, angle):
    return apply_gate(state, pauli_rotation(p, angle))


def apply_generator(state, generator, theta):
    """``exp(theta G)`` for an anti-Hermitian ``G`` made of commuting strings.

    ``G = sum_k i a_k P_k`` with real ``a_k`` is applied exactly as the
    product of rotations ``exp(i theta a_k P_k)``.
    """
    if not generator.commuting_strings():
        raise ValueError("generator strings must commute for an exact exponential")
    for c, p in generator:
        if abs(c.real) > 1e-12:
            raise ValueError("generator must be anti-Hermitian")
        state = apply_gate(state, GateOp("rot", pauli=p, angle=-2.0 * theta * c.imag))
    return state


# ---------------------------------------------------------------------------
# operator action and expectation values
# ---------------------------------------------------------------------------

def apply_pauli_sum(state, h):
    """Return ``h psi`` (unnormalized) in the same representation."""
    if h.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")
    rc = h.raw_coeffs()
    if isinstance(state, DenseState):
        out = _K.dense_apply_pauli_sum(state.amplitudes, h.xs, h.zs, rc)
        return DenseState(state.n_qubits, out)
    return _sparse_apply_pauli_sum(state, h, rc)


def _sparse_apply_pauli_sum(state, h, rc, chunk=1 << 22):
    idx, vals = state.indices, state.values
    n = state.n_qubits
    if len(h) == 0 or idx.size == 0:
        return SparseState(n, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.complex128), trusted=True)
    uidx = idx.view(np.uint64)
    acc_idx = np.zeros(0, dtype=np.int64)
    acc_val = np.zeros(0, dtype=np.complex128)
    per = max(1, chunk // max(1, idx.size))
    t0 = 0
    nt = len(h)
    while t0 < nt:
        t1 = min(nt, t0 + per)
        zs = h.zs[t0:t1]
        xs = h.xs[t0:t1]
        sign = 1.0 - 2.0 * (_pc(uidx[:, None] & zs[None, :]) & 1)
        contrib = (vals[:, None] * sign) * rc[None, t0:t1]
        gstarts = np.concatenate(([0], np.flatnonzero(xs[1:] != xs[:-1]) + 1))
        summed = np.add.reduceat(contrib, gstarts, axis=1)
        keys = (uidx[:, None] ^ xs[gstarts][None, :]).view(np.int64)
        acc_idx, acc_val = _reduce(np.concatenate((acc_idx, keys.ravel())),
                                   np.concatenate((acc_val, summed.ravel())))
        t0 = t1
    return _new_sparse(n, acc_idx, acc_val)


def _reduce(keys, vals):
    order = np.argsort(keys, kind="stable")
    keys, vals = keys[order], vals[order]
    if keys.size == 0:
        return keys, vals
    new = np.ones(keys.size, dtype=bool)
    new[1:] = keys[1:] != keys[:-1]
    starts = np.flatnonzero(new)
    return keys[starts], np.add.reduceat(vals, starts)


def term_expectations(state, h):
    """Per-term ``<psi|P_t|psi>`` for the canonical strings of ``h``."""
    if h.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")
    phase = (1j) ** (_pc(h.xs & h.zs) % 4)
    if isinstance(state, DenseState):
        raw = _K.dense_pauli_expect(state.amplitudes, h.xs, h.zs)
    else:
        raw = _K.sparse_pauli_expect(state.indices, state.values, state.table(), state.full, h.xs, h.zs)
    return raw * phase


def expectation(state, h):
    """``<psi|h|psi>`` for a Hermitian ``h``.

    Raises
    ------
    ValueError
        If ``h`` is not Hermitian or the widths differ.
    """
    if not h.is_hermitian():
        raise ValueError("expectation requires a Hermitian operator")
    if len(h) == 0:
        return 0.0
    vals = term_expectations(state, h)
    return float(np.real(np.einsum("i,i->", h.coeffs, vals)))


def inner(a, b):
    """``<a|b>``."""
    if isinstance(a, SparseState) and isinstance(b, SparseState):
        common, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
        return complex(np.vdot(a.values[ia], b.values[ib]))
    return complex(np.vdot(_dense_of(a), _dense_of(b)))


def _dense_of(s):
    return s.to_dense() if hasattr(s, "to_dense") else np.asarray(s)


def fidelity(a, b):
    return abs(inner(a, b)) ** 2


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def probabilities(state):
    if isinstance(state, SparseState):
        return state.indices, np.abs(state.values) ** 2
    p = np.abs(state.amplitudes) ** 2
    return np.arange(p.size), p


def sample(state, shots, seed, stream="sample"):
    """Histogram ``{basis index: count}`` of ``shots`` i.i.d. draws."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    support, p = probabilities(state)
    p = p / p.sum()
    rng = make_rng(seed, stream)
    counts = rng.multinomial(int(shots), p)
    nz = np.flatnonzero(counts)
    return {int(support[i]): int(counts[i]) for i in nz}


def _measure_basis_gates(p):
    gates = []
    for q in p.support:
        bx, bz = (p.x >> q) & 1, (p.z >> q) & 1
        if bx and bz:
            gates.append(gate("sdg", q))
            gates.append(gate("h", q))
        elif bx:
            gates.append(gate("h", q))
    return gates


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


# ---------------------------------------------------------------------------
# time evolution
# ---------------------------------------------------------------------------

def trotter_evolve(state, schedule, total_time, steps):
    """First-order Trotter evolution under ``H(t)`` sampled at step midpoints.

    Parameters
    ----------
    schedule : callable or PauliSum
        ``schedule(t)`` returns the Hermitian ``PauliSum`` at time ``t``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if isinstance(schedule, PauliSum):
        fixed = schedule
        schedule = lambda t: fixed  # noqa: E731
    dt = total_time / steps
    for k in range(steps):
        h = schedule((k + 0.5) * dt)
        if not h.is_hermitian():
            raise ValueError("H(t) must be Hermitian")
        phase = 0.0
        for c, p in h:
            if p.x == 0 and p.z == 0:
                phase += c.real * dt
                continue
            state = apply_gate(state, GateOp("rot", pauli=p, angle=2.0 * c.real * dt))
        if phase:
            state = _scale(state, np.exp(-1j * phase))
    return state


def _scale(state, f):
    if isinstance(state, DenseState):
        return DenseState(state.n_qubits, state.amplitudes * f)
    return SparseState(state.n_qubits, state.indices, state.values * f, trusted=True)


# ---------------------------------------------------------------------------
# dump format
# ---------------------------------------------------------------------------

def dump_state(state):
    """Text dump: one ``index<TAB>re<TAB>im`` line per nonzero, sorted."""
    if isinstance(state, SparseState):
        idx, vals = state.indices, state.values
    else:
        v = state.to_dense()
        idx = np.flatnonzero(np.abs(v) >= SPARSE_THRESHOLD)
        vals = v[idx]
    return "".join(f"{i}\t{v.real:.17g}\t{v.imag:.17g}\n" for i, v in zip(idx.tolist(), vals.tolist()))


def load_state_dump(text, n_qubits):
    idx, vals = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        i, re_, im_ = line.split("\t")
        idx.append(int(i))
        vals.append(complex(float(re_), float(im_)))
    return SparseState(n_qubits, idx, vals)


# ---------------------------------------------------------------------------
# backends used by the variational layer
# ---------------------------------------------------------------------------

class Backend:
    """Shared backend interface; subclasses provide state construction."""

    name = "base"
    supports_adjoint = True

    def basis_state(self, n_qubits, index=0):
        raise NotImplementedError

    def apply_gate(self, state, g):
        return apply_gate(state, g)

    def apply_generator(self, state, generator, theta):
        return apply_generator(state, generator, theta)

    def apply_pauli_sum(self, state, h):
        return apply_pauli_sum(state, h)

    def expectation(self, state, h):
        return expectation(state, h)

    def term_expectations(self, state, h):
        return term_expectations(state, h)

    def inner(self, a, b):
        return inner(a, b)

    def to_dense(self, state):
        return state.to_dense()

    def sample(self, state, shots, seed):
        return sample(state, shots, seed)

    def sampled_expectation(self, state, h, shots, seed):
        return sampled_expectation(state, h, shots, seed)

    def gradients(self, state, h, generators):
        """``<psi|[H, G]|psi> = 2 Re <H psi|G psi>`` for anti-Hermitian ``G``."""
        hpsi = apply_pauli_sum(state, h)
        out = np.empty(len(generators))
        for k, g in enumerate(generators):
            out[k] = 2.0 * inner(hpsi, apply_pauli_sum(state, g)).real
        return out

    def line_energies(self, state, h, generators, thetas):
        """Energies of ``exp(theta G) psi`` for each generator and angle.

        ``thetas`` is either one grid shared by all generators or an array
        of shape ``(len(generators), m)``.

        Single-string generators ``G = i a P`` use the closed form
        ``E = c^2 E0 + s^2 <P H P> + (c s / a) <[H, G]>`` with
        ``c = cos(a theta)``, ``s = sin(a theta)``; other generators are
        applied explicitly.
        """
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = np.broadcast_to(thetas, (len(generators), thetas.size))
        out = np.empty(thetas.shape)
        single = [len(g) == 1 and abs(g.coeffs[0].real) < 1e-12 for g in generators]
        if any(single):
            tv = np.real(self.term_expectations(state, h) * h.coeffs)
            e0 = float(tv.sum())
            comms = [commutator(h, g) if s else None for g, s in zip(generators, single)]
            batch = [c for c in comms if c is not None and len(c)]
            grads = {}
            if batch:
                # unit weights so distinct candidates never cancel
                merged = PauliSum(h.n_qubits, np.concatenate([c.xs for c in batch]),
                                  np.concatenate([c.zs for c in batch]),
                                  np.ones(sum(len(c) for c in batch)))
                vals = dict(zip(zip(merged.xs.tolist(), merged.zs.tolist()),
                                self.term_expectations(state, merged).tolist()))
                for k, c in enumerate(comms):
                    if c is not None and len(c):
                        ev = np.array([vals[(x, z)] for x, z in zip(c.xs.tolist(), c.zs.tolist())])
                        grads[k] = float(np.real(np.einsum("i,i->", c.coeffs, ev)))
        for k, g in enumerate(generators):
            if single[k]:
                a = g.coeffs[0].imag
                anti = (_pc(h.xs & g.zs[0]) + _pc(h.zs & g.xs[0])) & 1
                e1 = float(np.sum(np.where(anti, -tv, tv)))
                gk = grads.get(k, 0.0)
                c, s = np.cos(a * thetas[k]), np.sin(a * thetas[k])
                out[k] = c * c * e0 + s * s * e1 + c * s * gk / a
            else:
                out[k] = [self.expectation(self.apply_generator(state, g, t), h) for t in thetas[k]]
        return out


class DenseBackend(Backend):
    """Dense state-vector backend."""

    name = "dense"

    def basis_state(self, n_qubits, index=0):
        return DenseState.basis(n_qubits, index)

    def from_dense(self, vec):
        vec = np.asarray(vec, dtype=np.complex128)
        return DenseState(int(vec.size).bit_length() - 1, vec.copy())


class SparseBackend(Backend):
    """Sparse state-vector backend."""

    name = "sparse"

    def basis_state(self, n_qubits, index=0):
        return SparseState.basis(n_qubits, index)

    def from_dense(self, vec):
        return SparseState.from_dense(vec)
