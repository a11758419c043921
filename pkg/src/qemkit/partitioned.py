"""Hybrid partitioned evaluation of Hamiltonians.

The qubits are split into ``2**eta`` contiguous blocks.  Terms supported
inside one block are compiled into a sparse ``2**w x 2**w`` block operator
and evaluated exactly against the sparse state; all remaining terms form
one MPO contracted against an MPS of the state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import mps as _mps
from .pauli import PauliSum, commutator, _pc
from .statevector import DenseState, SparseBackend, SparseState, term_expectations

DEFAULT_ETA = 1


@dataclass
class PartitionedHamiltonian:
    """Block decomposition of a ``PauliSum``.

    Attributes
    ----------
    blocks : list of (start, stop)
        Contiguous qubit ranges.
    local_terms : list of PauliSum
        Terms whose support lies inside each block (the identity term is
        assigned to block 0).
    interactive_sum : PauliSum
        The remaining terms.
    """

    n_qubits: int
    eta: int
    blocks: list
    local_terms: list
    interactive_sum: PauliSum
    source: PauliSum
    _mpo: object = field(default=None, repr=False)
    _csr: list = field(default=None, repr=False)

    @property
    def interactive_terms(self):
        """MPO of the cross-block terms (built on first use)."""
        if self._mpo is None:
            self._mpo = _mps.mpo_from_pauli_sum(self.interactive_sum)
        return self._mpo

    def reconstruct(self):
        out = self.interactive_sum
        for part in self.local_terms:
            out = out + part
        return out

    def block_operators(self):
        """Per-block CSR matrices acting on the block's own bits."""
        if self._csr is None:
            self._csr = [_block_csr(part, lo, hi) for part, (lo, hi) in zip(self.local_terms, self.blocks)]
        return self._csr

    @property
    def stored_entries(self):
        """Number of stored nonzeros across the compiled block operators."""
        return int(sum(m.nnz for m in self.block_operators()))


def block_ranges(n_qubits, eta):
    if eta < 0 or (1 << eta) > n_qubits:
        raise ValueError(f"partition depth {eta} too deep for {n_qubits} qubits")
    size = math.ceil(n_qubits / (1 << eta))
    return [(lo, min(lo + size, n_qubits)) for lo in range(0, n_qubits, size)]


def _split(h, blocks):
    sup = h.xs | h.zs
    locals_ = []
    used = np.zeros(len(h), dtype=bool)
    for b, (lo, hi) in enumerate(blocks):
        inside = np.uint64(((1 << hi) - 1) ^ ((1 << lo) - 1))
        m = (sup & ~inside) == 0
        if b > 0:
            m &= sup != 0
        m &= ~used
        used |= m
        locals_.append(h.filter(m))
    return locals_, h.filter(~used)


def partition_hamiltonian(h, eta=DEFAULT_ETA):
    """Classify each term of ``h`` as block-local or interactive by support."""
    blocks = block_ranges(h.n_qubits, eta)
    local, inter = _split(h, blocks)
    return PartitionedHamiltonian(h.n_qubits, eta, blocks, local, inter, h)


def _block_csr(part, lo, hi):
    w = hi - lo
    dim = 1 << w
    cols = np.arange(dim, dtype=np.uint64)
    mat = scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
    if len(part) == 0:
        return mat
    rc = part.raw_coeffs()
    xs = part.xs >> np.uint64(lo)
    zs = part.zs >> np.uint64(lo)
    rows_all, cols_all, vals_all = [], [], []
    for x in np.unique(xs):
        sel = xs == x
        acc = np.zeros(dim, dtype=np.complex128)
        for z, c in zip(zs[sel], rc[sel]):
            acc += np.where(_pc(cols & z) & 1, -c, c)
        keep = acc != 0
        rows_all.append((cols[keep] ^ x).astype(np.int64))
        cols_all.append(cols[keep].astype(np.int64))
        vals_all.append(acc[keep])
    r = np.concatenate(rows_all)
    c = np.concatenate(cols_all)
    v = np.concatenate(vals_all)
    return scipy.sparse.csr_matrix((v, (r, c)), shape=(dim, dim))


def _as_sparse(state):
    if isinstance(state, SparseState):
        return state
    if isinstance(state, DenseState):
        return SparseState.from_dense(state.amplitudes)
    raise TypeError("partitioned evaluation needs a state vector")


def _local_energy(state, ph):
    """Exact block-local contribution, one block operator at a time."""
    idx, vals = state.indices, state.values
    total = 0.0
    for (lo, hi), op in zip(ph.blocks, ph.block_operators()):
        if op.nnz == 0:
            continue
        mask = np.int64(((1 << hi) - 1) ^ ((1 << lo) - 1))
        local = (idx & mask) >> np.int64(lo)
        rest = idx & ~mask
        groups, gid = np.unique(rest, return_inverse=True)
        v = scipy.sparse.csr_matrix((vals, (local, gid)), shape=(op.shape[0], groups.size))
        hv = op @ v
        total += float(np.real(hv.multiply(v.conj()).sum()))
    return total


def _cached_mps(state, cutoff, max_bond):
    key = ("mps", cutoff, max_bond)
    st = state._cache.get(key)
    if st is None:
        st = _mps.mps_from_dense(state, cutoff=cutoff, max_bond=max_bond, dense_limit=24)
        state._cache[key] = st
    return st


def interactive_bound(ph, mps_state):
    """Bound on the interactive-part error from truncation and compression."""
    norm = float(np.sum(np.abs(ph.interactive_sum.coeffs)))
    eps = mps_state.accumulated_truncation_error
    return 2.0 * norm * math.sqrt(eps) + ph.interactive_terms.error_bound


def partitioned_expectation(state, ph, mps_cutoff=0.0, max_bond=None, return_bound=False):
    """``<psi|H|psi>`` with exact local blocks and an MPS/MPO interactive part.

    Parameters
    ----------
    state : SparseState or DenseState
    ph : PartitionedHamiltonian
    mps_cutoff : float
        Relative singular-value cutoff for the MPS of the state.
    return_bound : bool
        Also return the certified bound on the approximation error.
    """
    if ph.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")
    state = _as_sparse(state)
    value = _local_energy(state, ph)
    bound = 0.0
    if len(ph.interactive_sum):
        st = _cached_mps(state, mps_cutoff, max_bond)
        value += _mps.mps_expectation(st, ph.interactive_terms)
        bound = interactive_bound(ph, st)
    return (value, bound) if return_bound else value


def _split_values(state, c, blocks, mps_cutoff, max_bond):
    """Per-term expectations of ``c`` using the local/interactive split."""
    sup = c.xs | c.zs
    is_local = np.zeros(len(c), dtype=bool)
    for lo, hi in blocks:
        is_local |= (sup & ~np.uint64(((1 << hi) - 1) ^ ((1 << lo) - 1))) == 0
    out = np.zeros(len(c), dtype=np.complex128)
    if is_local.any():
        out[is_local] = term_expectations(state, c.filter(is_local))
    if (~is_local).any():
        st = _cached_mps(state, mps_cutoff, max_bond)
        out[~is_local] = _mps.term_expectations(st, c.filter(~is_local))
    return out


def partitioned_gradient(state, ph, generator, mps_cutoff=0.0, max_bond=None):
    """``<psi|[H, G]|psi>`` with the same exact/approximate split as the energy."""
    if ph.n_qubits != state.n_qubits or generator.n_qubits != state.n_qubits:
        raise ValueError("width mismatch")
    state = _as_sparse(state)
    c = commutator(ph.source, generator)
    if len(c) == 0:
        return 0.0
    vals = _split_values(state, c, ph.blocks, mps_cutoff, max_bond)
    return float(np.real(np.einsum("i,i->", c.coeffs, vals)))


class PartitionedBackend(SparseBackend):
    """Sparse state vectors with partitioned Hamiltonian evaluation.

    Gate application is the sparse state-vector path; expectation values
    and gradients split each operator into block-local and interactive
    parts.
    """

    name = "partitioned"
    supports_adjoint = False

    def __init__(self, eta=DEFAULT_ETA, cutoff=0.0, max_bond=None):
        self.eta = eta
        self.cutoff = cutoff
        self.max_bond = max_bond

    def partition(self, h):
        key = ("partition", self.eta)
        ph = h._cache.get(key)
        if ph is None:
            ph = partition_hamiltonian(h, self.eta)
            h._cache[key] = ph
        return ph

    def expectation(self, state, h):
        if not h.is_hermitian():
            raise ValueError("expectation requires a Hermitian operator")
        if len(h) == 0:
            return 0.0
        return partitioned_expectation(state, self.partition(h), self.cutoff, self.max_bond)

    def term_expectations(self, state, h):
        state = _as_sparse(state)
        return _split_values(state, h, block_ranges(h.n_qubits, self.eta), self.cutoff, self.max_bond)

    def gradients(self, state, h, generators):
        state = _as_sparse(state)
        comms = [commutator(h, g) for g in generators]
        batch = [c for c in comms if len(c)]
        out = np.zeros(len(generators))
        if not batch:
            return out
        merged = PauliSum(h.n_qubits, np.concatenate([c.xs for c in batch]),
                          np.concatenate([c.zs for c in batch]),
                          np.ones(sum(len(c) for c in batch)))
        vals = dict(zip(zip(merged.xs.tolist(), merged.zs.tolist()),
                        self.term_expectations(state, merged).tolist()))
        for k, c in enumerate(comms):
            if len(c):
                ev = np.array([vals[(x, z)] for x, z in zip(c.xs.tolist(), c.zs.tolist())])
                out[k] = float(np.real(np.einsum("i,i->", c.coeffs, ev)))
        return out
