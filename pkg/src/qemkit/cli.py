"""Command-line entry point: ``qemkit {vqe,qubo,walk,emulate}``.

Every run writes ``result.json`` and ``manifest.json`` into ``--out``
(default: current directory) and prints the result to stdout.  Exit codes:
0 success, 2 configuration error, 3 numerical-failure flag.
"""
from __future__ import annotations

import argparse
import json
import os
import resource
import sys
import time

import numpy as np

from . import __version__
from .kernels import IMPLEMENTATION

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
THREADS_ENV = "QEMKIT_THREADS"


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"BLAS/OpenMP threads (default from ${THREADS_ENV})")
    p.add_argument("--out", default=".", help="directory for result.json and manifest.json")


def build_parser():
    top = _Parser(prog="qemkit", description="Quantum emulation and hybrid-algorithm toolkit")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("vqe", help="variational ground-state runs")
    v.add_argument("--method", choices=["adapt", "mb-adapt", "gga", "tuccsd", "overlap-adapt"], default="adapt")
    v.add_argument("--pool", choices=["fermionic-sd", "qeb", "qubit", "mcp"], default="fermionic-sd")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--fcidump", help="FCIDUMP file")
    src.add_argument("--molecule", help="bundled molecule name")
    src.add_argument("--tfim", type=int, metavar="N", help="open transverse-field Ising chain of N spins")
    v.add_argument("--field", type=float, default=1.0, help="TFIM transverse field g")
    v.add_argument("--backend", choices=["dense", "sparse", "mps", "partitioned"], default="sparse")
    v.add_argument("--shots", default="exact", help="shots per measured string for selection gradients, or 'exact'")
    v.add_argument("--batch-size", type=int, default=None)
    v.add_argument("--grad-tol", type=float, default=1e-3)
    v.add_argument("--max-iter", type=int, default=200)
    v.add_argument("--eta", type=int, default=1, help="partition depth for the partitioned backend")
    v.add_argument("--max-evals", type=int, default=20_000, help="energy-evaluation budget per optimization")
    _common(v)

    q = sub.add_parser("qubo", help="water placement QUBO")
    q.add_argument("--solver", choices=["exact", "sa", "adiabatic"], default="exact")
    qs = q.add_mutually_exclusive_group(required=True)
    qs.add_argument("--density", help="Gaussian cube density")
    qs.add_argument("--qubo", help="QUBO JSON (dense lower triangle)")
    qs.add_argument("--planted", action="store_true", help="synthetic planted pocket from --seed")
    q.add_argument("--threshold", type=float, default=None, help="site threshold (default 5%% of max density)")
    q.add_argument("--min-sep", type=float, default=1.5)
    q.add_argument("--sigma", type=float, default=0.5)
    q.add_argument("--exclusion-radius", type=float, default=2.2)
    q.add_argument("--max-sites", type=int, default=20)
    q.add_argument("--sweeps", type=int, default=1000)
    q.add_argument("--total-time", type=float, default=20.0)
    q.add_argument("--steps", type=int, default=400)
    q.add_argument("--shots", type=int, default=1000)
    q.add_argument("--crystal", help="JSON list of crystal water positions for scoring")
    q.add_argument("--match-radius", type=float, default=1.0)
    _common(q)

    w = sub.add_parser("walk", help="amplitude estimation of E_pi(f)")
    w.add_argument("--chain", required=True, help="chain JSON (P, optional pi and f) or a bundled chain name")
    w.add_argument("--phase-bits", type=int, default=2)
    w.add_argument("--shots", type=int, default=1000)
    _common(w)

    e = sub.add_parser("emulate", help="run a circuit file")
    e.add_argument("circuit", help="gate-list or OpenQASM 2 file")
    e.add_argument("--backend", choices=["dense", "sparse", "mps"], default="dense")
    e.add_argument("--shots", type=int, default=1000)
    _common(e)
    return top


def _make_backend(name, eta=1):
    from .mps import MpsBackend
    from .partitioned import PartitionedBackend
    from .statevector import DenseBackend, SparseBackend

    if name == "dense":
        return DenseBackend()
    if name == "sparse":
        return SparseBackend()
    if name == "mps":
        return MpsBackend(cutoff=0.0)
    return PartitionedBackend(eta=eta, cutoff=0.0)


def _check(cond, message):
    if not cond:
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _vqe(args):
    from .chemistry import hf_reference, jordan_wigner, load_bundled, parse_fcidump
    from .models import tfim_hamiltonian
    from .oracles import DENSE_CAP, exact_ground_state
    from .vqe.adapt import AdaptOptions, VqeResult, IterationRecord, adapt_vqe, backend_metadata, cnot_summary, overlap_adapt
    from .vqe.ansatz import tuccsd_ansatz
    from .vqe.gga import GgaOptions, gga_vqe
    from .vqe.optimizer import OptimizerOptions, optimize_parameters
    from .vqe.pools import build_pool

    if args.tfim is not None:
        _check(args.tfim >= 2, "--tfim needs at least two spins")
        h = tfim_hamiltonian(args.tfim, 1.0, args.field)
        source, reference, mol = args.tfim, 0, None
    else:
        try:
            mol = parse_fcidump(args.fcidump) if args.fcidump else load_bundled(args.molecule)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load integrals: {exc}") from None
        h = jordan_wigner(mol)
        source, reference = mol, hf_reference(mol)
    backend = _make_backend(args.backend, args.eta)
    shots = None
    if args.shots != "exact":
        try:
            shots = int(args.shots)
        except ValueError:
            raise ConfigError("--shots must be an integer or 'exact'") from None
        _check(shots >= 1, "--shots must be positive")
    _check(args.max_evals >= 1, "--max-evals must be positive")
    optimizer = OptimizerOptions(max_evals=args.max_evals)
    if args.method == "tuccsd":
        _check(mol is not None, "tUCCSD needs molecular integrals")
        ans = tuccsd_ansatz(mol)
        res = optimize_parameters(ans, h, backend, optimizer)
        ans = ans.with_thetas(res.thetas)
        e0 = float(backend.expectation(ans.reference_state(backend), h))
        trace = [IterationRecord(0, e0, float("nan"), [], [], 0, 0),
                 IterationRecord(1, res.energy, float("nan"), list(range(ans.n_params)), ans.labels,
                                 ans.n_params, 0, "" if res.ok else res.status)]
        result = VqeResult("tuccsd", res.energy, res.thetas, trace, cnot_summary(ans),
                           backend_metadata(backend), res.status, 0, ans)
        out = result.to_dict()
        failed = res.status == "budget"
    else:
        try:
            pool = build_pool(args.pool, source)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        _check(len(pool) > 0, f"the {args.pool} pool is empty for this system")
        if args.method in ("adapt", "mb-adapt"):
            k = args.batch_size or (1 if args.method == "adapt" else 3)
            opts = AdaptOptions(grad_tol=args.grad_tol, max_iter=args.max_iter, batch_size=k,
                                shots=shots, seed=args.seed, optimizer=optimizer)
            result = adapt_vqe(h, pool, backend, opts, reference, method=args.method)
        elif args.method == "gga":
            try:
                result = gga_vqe(h, pool, backend, GgaOptions(max_iter=args.max_iter), reference)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        else:
            _check(h.n_qubits <= DENSE_CAP, "overlap-adapt builds its exact target densely (<= 14 qubits)")
            from .vqe.adapt import OverlapOptions

            _, vec = exact_ground_state(h)
            target = backend.from_dense(vec)
            ans = overlap_adapt(target, pool, backend, OverlapOptions(max_iter=args.max_iter), reference)
            energy = float(backend.expectation(ans.prepare(backend), h))
            out = {"method": "overlap-adapt", "energy": energy, "overlap": ans.info["overlap"],
                   "overlap_trace": ans.info["trace"], "status": ans.info["status"],
                   "operators": ans.labels, "thetas": [float(t) for t in ans.thetas],
                   "cnot_count": cnot_summary(ans), "backend": backend_metadata(backend)}
            return out, not np.isfinite(energy)
        out = result.to_dict()
        failed = (not np.isfinite(result.energy)) or any(r.flag in ("budget", "energy_increase_reverted")
                                                          for r in result.trace)
    return out, failed


def _qubo(args):
    from .qubo import (CandidateSites, QuboProblem, build_qubo, load_density, planted_pocket,
                       propose_sites, score_recovery, solve_adiabatic, solve_exact, solve_sa, AnnealSchedule)

    crystal = None
    if args.qubo:
        try:
            with open(args.qubo) as fh:
                q = QuboProblem.from_json(json.load(fh))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read QUBO: {exc}") from None
    else:
        if args.planted:
            pocket = planted_pocket(seed=args.seed)
            grid, crystal = pocket.grid, pocket.waters
        else:
            try:
                grid = load_density(args.density)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read density: {exc}") from None
        thr = args.threshold if args.threshold is not None else 0.05 * float(grid.values.max())
        _check(thr > 0, "density is empty")
        sites = propose_sites(grid, thr, args.min_sep, args.sigma, args.exclusion_radius, args.max_sites)
        _check(len(sites) >= 1, "no candidate sites above the threshold")
        q = build_qubo(grid, sites)
    if args.crystal:
        with open(args.crystal) as fh:
            crystal = np.array(json.load(fh), dtype=float)
    if args.solver == "exact":
        _check(q.n <= 25, "exact solver handles at most 25 variables")
        sol = solve_exact(q)
    elif args.solver == "sa":
        sol = solve_sa(q, AnnealSchedule(sweeps=args.sweeps), args.seed)
    else:
        _check(q.n <= 16, "adiabatic solver handles at most 16 variables")
        sol = solve_adiabatic(q, args.total_time, args.steps, shots=args.shots, seed=args.seed)
    out = {"solution": {k: v for k, v in sol.to_json().items() if k != "wall_time"},
           "qubo": q.to_json(), "cost_recomputed": q.cost(sol.x)}
    if crystal is not None and q.sites is not None:
        out["recovery_percent"] = score_recovery(sol, q.sites, crystal, args.match_radius)
    failed = abs(out["cost_recomputed"] - sol.cost) > 1e-10
    return out, failed


def _walk(args):
    from .qwalk import analyze_chain, estimate_mean, load_chain

    try:
        chain = load_chain(args.chain)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read chain: {exc}") from None
    _check(args.phase_bits >= 1, "--phase-bits must be >= 1")
    _check(args.shots >= 1, "--shots must be positive")
    res = estimate_mean(chain, args.phase_bits, args.shots, args.seed)
    an = analyze_chain(chain)
    out = res.to_json()
    out.update(gap=an.gap, reversible=an.reversible, phase_bits=args.phase_bits)
    return out, False


def _emulate(args):
    from . import mps
    from .circuits import load_circuit
    from .statevector import DenseState, SparseState, apply_circuit, dump_state, sample

    try:
        circ = load_circuit(args.circuit)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    n = circ.n_qubits
    if args.backend == "dense":
        _check(n <= 30, "dense backend is limited to 30 qubits")
        state = apply_circuit(DenseState.basis(n), circ)
    elif args.backend == "sparse":
        state = apply_circuit(SparseState.basis(n), circ)
    else:
        st = mps.apply_circuit(mps.MpsState.basis(n, 0, cutoff=0.0), circ)
        state = SparseState.from_dense(st.to_dense()) if n <= mps.DENSE_LIMIT else None
        _check(state is not None, "MPS state dump needs <= 20 qubits")
    dump = dump_state(state)
    path = os.path.join(args.out, "state.txt")
    with open(path, "w") as fh:
        fh.write(dump)
    hist = sample(state, args.shots, args.seed)
    out = {"n_qubits": n, "n_gates": len(circ), "state_dump": "state.txt", "backend": args.backend,
           "histogram": {str(k): v for k, v in sorted(hist.items())}}
    return out, not np.isfinite(state.norm())


_COMMANDS = {"vqe": _vqe, "qubo": _qubo, "walk": _walk, "emulate": _emulate}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1)


def run(argv=None):
    """Parse ``argv``, run the subcommand and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"qemkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    threads = args.threads if args.threads is not None else int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads < 1:
        print("qemkit: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    try:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=threads):
            out, failed = _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"qemkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    wall = time.perf_counter() - t0
    config = {k: v for k, v in vars(args).items() if k not in ("out", "threads")}
    manifest = {
        "subcommand": args.command,
        "argv": argv,
        "config": config,
        "seed": args.seed,
        "backend": getattr(args, "backend", None),
        "threads": threads,
        "code_version": __version__,
        "kernels": IMPLEMENTATION,
        "wall_time_s": wall,
        "peak_rss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        "status": "numerical_failure" if failed else "ok",
    }
    text = dumps(out)
    with open(os.path.join(args.out, "result.json"), "w") as fh:
        fh.write(text + "\n")
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        fh.write(dumps(manifest) + "\n")
    print(text)
    return EXIT_NUMERIC if failed else EXIT_OK


def replay(manifest_path, out=None):
    """Re-run the command recorded in a manifest (optionally into ``out``)."""
    with open(manifest_path) as fh:
        m = json.load(fh)
    argv = list(m["argv"])
    if out is not None:
        if "--out" in argv:
            i = argv.index("--out")
            del argv[i:i + 2]
        argv += ["--out", out]
    return run(argv)


def main():
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
