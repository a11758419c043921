# cython: language_level=3
"""Compiled hot loops.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature; ``qemkit.kernels`` picks one at import time.

Pauli strings are passed as raw masks.  The raw operator R(x, z) acts as
R|j> = (-1)^popcount(j & z) |j ^ x>; callers fold the Y phases and the
coefficients in.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport int64_t, uint64_t, int32_t, int8_t

cnp.import_array()

cdef extern int __builtin_popcountll(unsigned long long) nogil
cdef extern int __builtin_ctzll(unsigned long long) nogil

ctypedef double complex cplx

cdef inline double _sgn(uint64_t v) nogil:
    return -1.0 if (__builtin_popcountll(v) & 1) else 1.0


IMPLEMENTATION = "cython"


# ---------------------------------------------------------------------------
# dense state vectors
# ---------------------------------------------------------------------------

def dense_pauli_expect(const cplx[::1] psi, const uint64_t[::1] xs, const uint64_t[::1] zs):
    """Per-term <psi|R(x_t, z_t)|psi> for terms sorted (grouped) by x."""
    cdef Py_ssize_t nt = xs.shape[0], dim = psi.shape[0]
    cdef cnp.ndarray[cplx, ndim=1] out_arr = np.zeros(nt, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef Py_ssize_t g0 = 0, g1, t, j
    cdef uint64_t x
    cdef cplx a
    while g0 < nt:
        x = xs[g0]
        g1 = g0 + 1
        while g1 < nt and xs[g1] == x:
            g1 += 1
        with nogil:
            for j in range(dim):
                a = psi[<uint64_t>j ^ x].conjugate() * psi[j]
                if a.real == 0.0 and a.imag == 0.0:
                    continue
                for t in range(g0, g1):
                    if __builtin_popcountll(<uint64_t>j & zs[t]) & 1:
                        out[t] = out[t] - a
                    else:
                        out[t] = out[t] + a
        g0 = g1
    return out_arr


def dense_apply_pauli_sum(const cplx[::1] psi, const uint64_t[::1] xs, const uint64_t[::1] zs,
                          const cplx[::1] coeffs):
    """Return sum_t c_t R(x_t, z_t) psi for terms grouped by x."""
    cdef Py_ssize_t nt = xs.shape[0], dim = psi.shape[0]
    cdef cnp.ndarray[cplx, ndim=1] out_arr = np.zeros(dim, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef Py_ssize_t g0 = 0, g1, t, j
    cdef uint64_t x
    cdef cplx acc, v
    while g0 < nt:
        x = xs[g0]
        g1 = g0 + 1
        while g1 < nt and xs[g1] == x:
            g1 += 1
        with nogil:
            for j in range(dim):
                v = psi[j]
                if v.real == 0.0 and v.imag == 0.0:
                    continue
                acc = 0
                for t in range(g0, g1):
                    if __builtin_popcountll(<uint64_t>j & zs[t]) & 1:
                        acc = acc - coeffs[t]
                    else:
                        acc = acc + coeffs[t]
                out[<uint64_t>j ^ x] = out[<uint64_t>j ^ x] + acc * v
        g0 = g1
    return out_arr


def dense_pauli_rotation(cplx[::1] psi, uint64_t x, uint64_t z, double a, cplx b):
    """In place psi <- a psi + b R(x, z) psi."""
    cdef Py_ssize_t dim = psi.shape[0], j
    cdef uint64_t k
    cdef cplx u, w
    with nogil:
        if x == 0:
            for j in range(dim):
                psi[j] = psi[j] * (a + b * _sgn(<uint64_t>j & z))
        else:
            for j in range(dim):
                k = <uint64_t>j ^ x
                if k <= <uint64_t>j:
                    continue
                u = psi[j]
                w = psi[k]
                psi[j] = a * u + b * _sgn(k & z) * w
                psi[k] = a * w + b * _sgn(<uint64_t>j & z) * u


# ---------------------------------------------------------------------------
# sparse state vectors: sorted int64 index arrays + open-addressing lookup
# ---------------------------------------------------------------------------

cdef inline uint64_t _hash(uint64_t key, int shift) nogil:
    return (key * <uint64_t>11400714819323198485ULL) >> shift


def build_table(const int64_t[::1] idx):
    """Open-addressing position table (stores position + 1, 0 = empty)."""
    cdef Py_ssize_t n = idx.shape[0], i
    cdef int bits = 4
    while (<Py_ssize_t>1 << bits) < 2 * n + 2:
        bits += 1
    cdef Py_ssize_t cap = <Py_ssize_t>1 << bits
    cdef cnp.ndarray[int32_t, ndim=1] tab_arr = np.zeros(cap, dtype=np.int32)
    cdef int32_t[::1] tab = tab_arr
    cdef uint64_t mask = <uint64_t>cap - 1, h
    cdef int shift = 64 - bits
    with nogil:
        for i in range(n):
            h = _hash(<uint64_t>idx[i], shift)
            while tab[h] != 0:
                h = (h + 1) & mask
            tab[h] = <int32_t>(i + 1)
    return tab_arr


cdef inline Py_ssize_t _find(const int64_t[::1] idx, const int32_t[::1] tab,
                             int shift, uint64_t mask, int64_t key) nogil:
    cdef uint64_t h = _hash(<uint64_t>key, shift)
    cdef int32_t p
    while True:
        p = tab[h]
        if p == 0:
            return -1
        if idx[p - 1] == key:
            return p - 1
        h = (h + 1) & mask


cdef inline int _shift_of(Py_ssize_t cap) nogil:
    cdef int bits = 0
    while (<Py_ssize_t>1 << bits) < cap:
        bits += 1
    return 64 - bits


def lookup(const int64_t[::1] idx, const int32_t[::1] tab, const int64_t[::1] keys):
    """Positions of ``keys`` in ``idx`` (-1 when absent)."""
    cdef Py_ssize_t n = keys.shape[0], i
    cdef cnp.ndarray[int64_t, ndim=1] out_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t cap = tab.shape[0]
    cdef int shift = _shift_of(cap)
    cdef uint64_t mask = <uint64_t>cap - 1
    with nogil:
        for i in range(n):
            out[i] = _find(idx, tab, shift, mask, keys[i])
    return out_arr


def sparse_pauli_expect(const int64_t[::1] idx, const cplx[::1] vals,
                        const int32_t[::1] tab, bint full,
                        const uint64_t[::1] xs, const uint64_t[::1] zs):
    """Per-term <psi|R(x_t, z_t)|psi> on a sparse state (terms grouped by x)."""
    cdef Py_ssize_t nt = xs.shape[0], nnz = idx.shape[0]
    cdef cnp.ndarray[cplx, ndim=1] out_arr = np.zeros(nt, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef Py_ssize_t g0 = 0, g1, t, i, p
    cdef uint64_t x, j
    cdef cplx a
    cdef Py_ssize_t cap = tab.shape[0]
    cdef int shift = _shift_of(cap) if cap > 0 else 0
    cdef uint64_t mask = <uint64_t>cap - 1 if cap > 0 else 0
    while g0 < nt:
        x = xs[g0]
        g1 = g0 + 1
        while g1 < nt and xs[g1] == x:
            g1 += 1
        with nogil:
            for i in range(nnz):
                j = <uint64_t>idx[i]
                if x == 0:
                    p = i
                elif full:
                    p = <Py_ssize_t>(j ^ x)
                else:
                    p = _find(idx, tab, shift, mask, <int64_t>(j ^ x))
                    if p < 0:
                        continue
                a = vals[p].conjugate() * vals[i]
                for t in range(g0, g1):
                    if __builtin_popcountll(j & zs[t]) & 1:
                        out[t] = out[t] - a
                    else:
                        out[t] = out[t] + a
        g0 = g1
    return out_arr


def sparse_gather_mix(const int64_t[::1] new_idx, const int64_t[::1] idx,
                      const cplx[::1] vals, const int32_t[::1] tab, bint full,
                      uint64_t x, uint64_t z, double a, cplx b):
    """out[u] = a psi(u) + b (-1)^popcount((u^x)&z) psi(u^x) over ``new_idx``."""
    cdef Py_ssize_t n = new_idx.shape[0], i, p, q
    cdef cnp.ndarray[cplx, ndim=1] out_arr = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] out = out_arr
    cdef Py_ssize_t cap = tab.shape[0]
    cdef int shift = _shift_of(cap) if cap > 0 else 0
    cdef uint64_t mask = <uint64_t>cap - 1 if cap > 0 else 0
    cdef uint64_t u, w
    cdef cplx acc
    with nogil:
        for i in range(n):
            u = <uint64_t>new_idx[i]
            w = u ^ x
            if full:
                p = <Py_ssize_t>u
                q = <Py_ssize_t>w
            else:
                p = _find(idx, tab, shift, mask, <int64_t>u)
                q = _find(idx, tab, shift, mask, <int64_t>w)
            acc = 0
            if p >= 0:
                acc = a * vals[p]
            if q >= 0:
                acc = acc + b * _sgn(w & z) * vals[q]
            out[i] = acc
    return out_arr


# ---------------------------------------------------------------------------
# QUBO solvers
# ---------------------------------------------------------------------------

def qubo_exhaustive(const double[:, ::1] Q, double tol):
    """Gray-code enumeration of x^T Q x; ties resolved to the smallest mask."""
    cdef Py_ssize_t n = Q.shape[0], k, j
    cdef cnp.ndarray[double, ndim=1] h_arr = np.zeros(n)
    cdef double[::1] h = h_arr
    cdef cnp.ndarray[int8_t, ndim=1] x_arr = np.zeros(n, dtype=np.int8)
    cdef int8_t[::1] x = x_arr
    cdef double cost = 0.0, best = 0.0, delta, sgn
    cdef uint64_t t, total = (<uint64_t>1) << n, gray = 0, best_mask = 0
    with nogil:
        for t in range(1, total):
            k = __builtin_ctzll(t)
            sgn = 1.0 - 2.0 * x[k]
            delta = sgn * (Q[k, k] + 2.0 * h[k])
            cost += delta
            x[k] = 1 - x[k]
            gray ^= (<uint64_t>1) << k
            for j in range(n):
                if j != k:
                    h[j] += sgn * Q[j, k]
            if cost < best - tol or (cost <= best + tol and gray < best_mask):
                best = cost
                best_mask = gray
    return best, best_mask


def qubo_anneal(const double[:, ::1] Q, const int8_t[::1] x0, const double[::1] betas,
                const double[:, ::1] uniforms):
    """Sequential-sweep single-flip Metropolis annealing; returns best seen."""
    cdef Py_ssize_t n = Q.shape[0], ns = betas.shape[0], s, i, j
    cdef cnp.ndarray[int8_t, ndim=1] x_arr = np.array(x0, dtype=np.int8)
    cdef int8_t[::1] x = x_arr
    cdef cnp.ndarray[int8_t, ndim=1] best_arr = np.array(x0, dtype=np.int8)
    cdef int8_t[::1] bx = best_arr
    cdef cnp.ndarray[double, ndim=1] h_arr = np.zeros(n)
    cdef double[::1] h = h_arr
    cdef cnp.ndarray[double, ndim=1] trace_arr = np.zeros(ns)
    cdef double[::1] trace = trace_arr
    cdef double cost = 0.0, best, delta, sgn, beta
    with nogil:
        for i in range(n):
            if x[i]:
                cost += Q[i, i]
                for j in range(n):
                    if j != i:
                        h[j] += Q[j, i]
        for i in range(n):
            if x[i]:
                for j in range(i + 1, n):
                    if x[j]:
                        cost += 2.0 * Q[i, j]
        best = cost
        for s in range(ns):
            beta = betas[s]
            for i in range(n):
                sgn = 1.0 - 2.0 * x[i]
                delta = sgn * (Q[i, i] + 2.0 * h[i])
                if delta <= 0.0 or uniforms[s, i] < exp(-beta * delta):
                    x[i] = 1 - x[i]
                    cost += delta
                    for j in range(n):
                        if j != i:
                            h[j] += sgn * Q[j, i]
                    if cost < best:
                        best = cost
                        for j in range(n):
                            bx[j] = x[j]
            trace[s] = best
    return best_arr, best, trace_arr


# ---------------------------------------------------------------------------
# classical Markov chain trajectories
# ---------------------------------------------------------------------------

def markov_walk(const double[:, ::1] cum, const double[::1] f, Py_ssize_t x0,
                const double[::1] uniforms):
    """Sum of f over the states visited after each of len(uniforms) steps."""
    cdef Py_ssize_t steps = uniforms.shape[0], d = cum.shape[0], t, y
    cdef Py_ssize_t x = x0
    cdef double total = 0.0, u
    with nogil:
        for t in range(steps):
            u = uniforms[t]
            y = 0
            while y < d - 1 and u >= cum[x, y]:
                y += 1
            x = y
            total += f[x]
    return total, x
