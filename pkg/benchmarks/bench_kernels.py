"""Compiled vs pure-numpy kernel timings.

Usage::

    python3 benchmarks/bench_kernels.py [--qubits 16] [--terms 200] [--repeat 3] [--json out.json]

Each kernel is called with identical inputs under both implementations; the
outputs are compared before timing so a speedup never hides a wrong answer.
"""
import argparse
import json
import sys
import time

import numpy as np

from qemkit import kernels


def _hamiltonian(rng, n, terms):
    xs = rng.integers(0, 1 << n, terms, dtype=np.uint64)
    xs[rng.random(terms) < 0.3] = 0
    zs = rng.integers(0, 1 << n, terms, dtype=np.uint64)
    order = np.lexsort((zs, xs))
    return xs[order], zs[order], rng.standard_normal(terms) + 0j


def _sparse_state(rng, n, nnz):
    idx = np.sort(rng.choice(1 << n, nnz, replace=False)).astype(np.int64)
    vals = rng.standard_normal(nnz) + 1j * rng.standard_normal(nnz)
    return idx, vals / np.linalg.norm(vals)


def cases(n, terms, seed=0):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    psi /= np.linalg.norm(psi)
    xs, zs, cs = _hamiltonian(rng, n, terms)
    idx, vals = _sparse_state(rng, n, 1 << (n - 2))
    q_n = min(n, 18)
    Q = rng.standard_normal((q_n, q_n))
    Q = (Q + Q.T) / 2
    sweeps = 2000
    betas = np.geomspace(0.1, 10.0, sweeps)
    uniforms = rng.random((sweeps, q_n))
    P = rng.random((8, 8))
    P /= P.sum(1, keepdims=True)
    cum = np.cumsum(P, axis=1)
    steps = rng.random(200_000)
    x_rot, z_rot = int(xs[-1]), int(zs[-1])

    def rotation(k):
        out = psi.copy()
        k.dense_pauli_rotation(out, np.uint64(x_rot), np.uint64(z_rot), 0.6, 0.8j)
        return out

    def sparse_expect(k):
        return k.sparse_pauli_expect(idx, vals, k.build_table(idx), False, xs, zs)

    def gather(k):
        new_idx = np.union1d(idx, idx ^ x_rot).astype(np.int64)
        return k.sparse_gather_mix(new_idx, idx, vals, k.build_table(idx), False,
                                   np.uint64(x_rot), np.uint64(z_rot), 0.6, 0.8j)

    return {
        f"dense_pauli_expect n={n} T={terms}": lambda k: k.dense_pauli_expect(psi, xs, zs),
        f"dense_apply_pauli_sum n={n} T={terms}": lambda k: k.dense_apply_pauli_sum(psi, xs, zs, cs),
        f"dense_pauli_rotation n={n}": rotation,
        f"sparse_pauli_expect nnz={idx.size} T={terms}": sparse_expect,
        f"sparse_gather_mix nnz={idx.size}": gather,
        f"qubo_exhaustive N={q_n}": lambda k: k.qubo_exhaustive(Q, 1e-10),
        f"qubo_anneal N={q_n} sweeps={sweeps}": lambda k: k.qubo_anneal(Q, np.zeros(q_n, np.int8), betas, uniforms),
        f"markov_walk steps={steps.size}": lambda k: k.markov_walk(cum, np.linspace(0, 1, 8), 0, steps),
    }


def _best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    return np.allclose(np.asarray(a), np.asarray(b), rtol=1e-9, atol=1e-10)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=16)
    ap.add_argument("--terms", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    cy, py = kernels.get("cython"), kernels.get("python")
    rows = []
    print(f"{'kernel':44s} {'cython [s]':>11s} {'python [s]':>11s} {'speedup':>8s}")
    for name, fn in cases(args.qubits, args.terms).items():
        if not _same(fn(cy), fn(py)):
            print(f"{name}: implementations disagree", file=sys.stderr)
            return 2
        tc = _best_time(lambda: fn(cy), args.repeat)
        tp = _best_time(lambda: fn(py), args.repeat)
        rows.append({"kernel": name, "cython_s": tc, "python_s": tp, "speedup": tp / tc})
        print(f"{name:44s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
