"""Pure-numpy twins of the compiled kernels in ``_kernels.pyx``.

Signatures and return conventions match the compiled module exactly so the
two can be swapped at import time.  The sparse ``table`` argument is ignored
here; lookups use binary search on the sorted index array.
"""
import numpy as np

IMPLEMENTATION = "python"

_CHUNK = 1 << 16


def _parity(v):
    return (np.bitwise_count(v) & 1).astype(bool)


def _groups(xs):
    xs = np.asarray(xs)
    if xs.size == 0:
        return []
    cuts = np.flatnonzero(xs[1:] != xs[:-1]) + 1
    starts = np.concatenate(([0], cuts))
    stops = np.concatenate((cuts, [xs.size]))
    return list(zip(starts.tolist(), stops.tolist()))


def dense_pauli_expect(psi, xs, zs):
    psi = np.asarray(psi, dtype=np.complex128)
    xs = np.asarray(xs, dtype=np.uint64)
    zs = np.asarray(zs, dtype=np.uint64)
    out = np.zeros(xs.size, dtype=np.complex128)
    j = np.arange(psi.size, dtype=np.uint64)
    for g0, g1 in _groups(xs):
        a = np.conj(psi[j ^ xs[g0]]) * psi
        for t in range(g0, g1):
            sign = np.where(_parity(j & zs[t]), -1.0, 1.0)
            out[t] = np.sum(sign * a)
    return out


def dense_apply_pauli_sum(psi, xs, zs, coeffs):
    psi = np.asarray(psi, dtype=np.complex128)
    xs = np.asarray(xs, dtype=np.uint64)
    zs = np.asarray(zs, dtype=np.uint64)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    out = np.zeros_like(psi)
    j = np.arange(psi.size, dtype=np.uint64)
    for g0, g1 in _groups(xs):
        acc = np.zeros(psi.size, dtype=np.complex128)
        for t in range(g0, g1):
            acc += np.where(_parity(j & zs[t]), -coeffs[t], coeffs[t])
        out[j ^ xs[g0]] += acc * psi
    return out


def dense_pauli_rotation(psi, x, z, a, b):
    j = np.arange(psi.size, dtype=np.uint64)
    x = np.uint64(x)
    z = np.uint64(z)
    if x == 0:
        psi *= a + b * np.where(_parity(j & z), -1.0, 1.0)
        return
    k = j ^ x
    rpsi = np.where(_parity(k & z), -1.0, 1.0) * psi[k]
    psi *= a
    psi += b * rpsi


def build_table(idx):
    return np.zeros(0, dtype=np.int32)


def lookup(idx, table, keys):
    idx = np.asarray(idx, dtype=np.int64)
    keys = np.asarray(keys, dtype=np.int64)
    if idx.size == 0:
        return np.full(keys.size, -1, dtype=np.int64)
    pos = np.searchsorted(idx, keys)
    pos_c = np.minimum(pos, idx.size - 1)
    hit = idx[pos_c] == keys
    return np.where(hit, pos_c, -1).astype(np.int64)


def sparse_pauli_expect(idx, vals, table, full, xs, zs):
    idx = np.asarray(idx, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.complex128)
    xs = np.asarray(xs, dtype=np.uint64)
    zs = np.asarray(zs, dtype=np.uint64)
    out = np.zeros(xs.size, dtype=np.complex128)
    uidx = idx.view(np.uint64)
    for g0, g1 in _groups(xs):
        x = xs[g0]
        if x == 0:
            a = np.conj(vals) * vals
            src = uidx
        else:
            pos = lookup(idx, table, (uidx ^ x).view(np.int64))
            hit = pos >= 0
            a = np.conj(vals[pos[hit]]) * vals[hit]
            src = uidx[hit]
        for t in range(g0, g1):
            sign = np.where(_parity(src & zs[t]), -1.0, 1.0)
            out[t] = np.sum(sign * a)
    return out


def sparse_gather_mix(new_idx, idx, vals, table, full, x, z, a, b):
    new_idx = np.asarray(new_idx, dtype=np.int64)
    u = new_idx.view(np.uint64)
    w = u ^ np.uint64(x)
    p = lookup(idx, table, new_idx)
    q = lookup(idx, table, w.view(np.int64))
    out = np.zeros(new_idx.size, dtype=np.complex128)
    hp = p >= 0
    out[hp] = a * vals[p[hp]]
    hq = q >= 0
    sign = np.where(_parity(w[hq] & np.uint64(z)), -1.0, 1.0)
    out[hq] += b * sign * vals[q[hq]]
    return out


def qubo_exhaustive(Q, tol):
    Q = np.asarray(Q, dtype=np.float64)
    n = Q.shape[0]
    best, best_mask = 0.0, 0
    total = 1 << n
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)
        costs = np.einsum("ki,ij,kj->k", bits, Q, bits)
        cmin = float(costs.min())
        if cmin < best - tol:
            best = cmin
            best_mask = int(masks[costs <= cmin + tol].min())
        elif cmin <= best + tol:
            cand = int(masks[costs <= best + tol].min())
            if cand < best_mask:
                best, best_mask = min(best, cmin), cand
    return best, best_mask


def qubo_anneal(Q, x0, betas, uniforms):
    Q = np.asarray(Q, dtype=np.float64)
    n = Q.shape[0]
    x = np.array(x0, dtype=np.int8)
    offdiag = Q - np.diag(np.diag(Q))
    h = offdiag @ x.astype(np.float64)
    cost = float(x @ Q @ x)
    best = cost
    bx = x.copy()
    trace = np.zeros(len(betas))
    for s, beta in enumerate(betas):
        for i in range(n):
            sgn = 1.0 - 2.0 * x[i]
            delta = sgn * (Q[i, i] + 2.0 * h[i])
            if delta <= 0.0 or uniforms[s, i] < np.exp(-beta * delta):
                x[i] = 1 - x[i]
                cost += delta
                h += sgn * offdiag[:, i]
                if cost < best:
                    best = cost
                    bx = x.copy()
        trace[s] = best
    return bx, best, trace


def markov_walk(cum, f, x0, uniforms):
    cum = np.asarray(cum, dtype=np.float64)
    d = cum.shape[0]
    x = int(x0)
    total = 0.0
    for u in uniforms:
        y = int(np.searchsorted(cum[x, : d - 1], u, side="right"))
        x = y
        total += f[x]
    return total, x
