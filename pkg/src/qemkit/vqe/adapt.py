"""ADAPT-VQE, batched (MB) ADAPT and Overlap-ADAPT."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.optimize

from ..pauli import PauliSum, commutator
from ..rng import make_rng
from ..statevector import _measure_basis_gates
from .ansatz import AnsatzCircuit
from .cnot import count_cnots
from .optimizer import OptimizerOptions, adjoint_gradient, optimize_parameters

MONOTONE_TOL = 1e-12


@dataclass
class AdaptOptions:
    """Settings shared by the ADAPT drivers.

    Attributes
    ----------
    grad_tol : float
        Stop when the largest pool gradient magnitude is below this (Ha).
    max_iter : int
        Maximum number of growth iterations.
    batch_size : int
        Operators added per iteration (1 is plain ADAPT).
    shots : int or None
        Shots per measured Pauli string for the selection gradients;
        ``None`` uses exact gradients.  Energies stay exact.
    seed : int
    optimizer : OptimizerOptions
    """

    grad_tol: float = 1e-3
    max_iter: int = 200
    batch_size: int = 1
    shots: int | None = None
    seed: int = 0
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    max_gradient: float
    selected: list
    labels: list
    n_params: int
    gradient_evaluations: int
    flag: str = ""


@dataclass
class VqeResult:
    """Outcome of a variational run.

    Attributes
    ----------
    energy : float
        Final energy (Hartree).
    thetas : ndarray
    trace : list of IterationRecord
        Entry 0 is the reference energy; later entries follow each growth
        step (or each greedy angle for GGA).
    cnot_count : dict
        Totals per decomposition rule (``None`` where a rule does not apply).
    backend : dict
    """

    method: str
    energy: float
    thetas: np.ndarray
    trace: list
    cnot_count: dict
    backend: dict
    status: str = "converged"
    gradient_evaluations: int = 0
    ansatz: AnsatzCircuit | None = None

    @property
    def energies(self):
        return np.array([r.energy for r in self.trace])

    @property
    def n_operators(self):
        return 0 if self.ansatz is None else self.ansatz.n_params

    def to_dict(self):
        return {
            "method": self.method,
            "energy": float(self.energy),
            "thetas": [float(t) for t in self.thetas],
            "operators": [] if self.ansatz is None else self.ansatz.labels,
            "trace": [asdict(r) for r in self.trace],
            "cnot_count": self.cnot_count,
            "backend": self.backend,
            "status": self.status,
            "gradient_evaluations": int(self.gradient_evaluations),
        }


def backend_metadata(backend):
    meta = {"name": backend.name}
    for key in ("eta", "cutoff", "max_bond"):
        if hasattr(backend, key):
            meta[key] = getattr(backend, key)
    return meta


def cnot_summary(ansatz):
    out = {}
    for rule in ("qubit", "QEB"):
        try:
            out[rule] = count_cnots(ansatz, rule)
        except ValueError:
            out[rule] = None
    return out


def mb_adapt_step(gradients, batch_size, threshold=0.0):
    """Indices of the ``batch_size`` largest ``|gradient|`` values.

    Ordered by decreasing magnitude, ties broken by lower index; entries
    with ``|g| < threshold`` are never selected.
    """
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    g = np.abs(np.asarray(gradients, dtype=float))
    order = np.lexsort((np.arange(g.size), -g))
    order = order[g[order] >= threshold]
    return [int(k) for k in order[:batch_size]]


def _merged_strings(comms):
    batch = [c for c in comms if len(c)]
    if not batch:
        return None
    return PauliSum(comms[0].n_qubits, np.concatenate([c.xs for c in batch]),
                    np.concatenate([c.zs for c in batch]), np.ones(sum(len(c) for c in batch)))


def sampled_gradients(backend, state, h, generators, shots, seed, stream=0):
    """Shot-noise estimates of ``<[H, G]>`` for each generator.

    Every distinct Pauli string in the commutators is measured once with
    ``shots`` shots in its own eigenbasis; the estimates are then shared
    by all generators that contain that string.
    """
    comms = [commutator(h, g) for g in generators]
    out = np.zeros(len(generators))
    merged = _merged_strings(comms)
    if merged is None:
        return out
    vals = {}
    for j, (_, p) in enumerate(merged):
        if p.x == 0 and p.z == 0:
            vals[(p.x, p.z)] = 1.0
            continue
        rotated = state
        for gt in _measure_basis_gates(p):
            rotated = backend.apply_gate(rotated, gt)
        sub = int(make_rng(seed, "gradient", stream, j).integers(1 << 62))
        hist = backend.sample(rotated, shots, sub)
        mask = p.x | p.z
        s = sum(cnt * (-1 if (k & mask).bit_count() & 1 else 1) for k, cnt in hist.items())
        vals[(p.x, p.z)] = s / shots
    for k, c in enumerate(comms):
        if len(c):
            ev = np.array([vals[(x, z)] for x, z in zip(c.xs.tolist(), c.zs.tolist())])
            out[k] = float(np.einsum("i,i->", c.coeffs.real, ev))
    return out


def _pool_gradients(backend, state, h, pool, opts, iteration):
    if opts.shots is None:
        return backend.gradients(state, h, pool.generators)
    return sampled_gradients(backend, state, h, pool.generators, opts.shots, opts.seed, iteration)


def adapt_vqe(h, pool, backend, opts=None, reference=0, method="adapt"):
    """Grow an ansatz by largest commutator gradient, re-optimizing each time.

    Parameters
    ----------
    h : PauliSum
        Hermitian Hamiltonian.
    pool : OperatorPool
    backend : Backend
    opts : AdaptOptions
        ``batch_size > 1`` gives MB-ADAPT.
    reference : ReferenceState, int or state
        Initial state (default: the all-zero basis state).

    Returns
    -------
    VqeResult
    """
    opts = opts or AdaptOptions()
    if not h.is_hermitian():
        raise ValueError("Hamiltonian must be Hermitian")
    if len(pool) == 0:
        raise ValueError("empty operator pool")
    if pool.n_qubits != h.n_qubits:
        raise ValueError("pool and Hamiltonian widths differ")
    if opts.batch_size > 1 and method == "adapt":
        method = "mb-adapt"
    ansatz = AnsatzCircuit(reference, pool)
    state = ansatz.prepare(backend)
    energy = float(backend.expectation(state, h))
    trace = [IterationRecord(0, energy, float("nan"), [], [], 0, 0)]
    n_grad = 0
    status = "max_iter"
    for it in range(1, opts.max_iter + 1):
        grads = _pool_gradients(backend, state, h, pool, opts, it)
        n_grad += len(pool)
        gmax = float(np.max(np.abs(grads)))
        trace[-1].max_gradient = gmax
        if gmax < opts.grad_tol:
            status = "converged"
            break
        chosen = mb_adapt_step(grads, opts.batch_size, opts.grad_tol)
        previous = ansatz.steps.copy()
        for k in chosen:
            ansatz.append(k, 0.0)
        res = optimize_parameters(ansatz, h, backend, opts.optimizer)
        flag = "" if res.ok else res.status
        if res.energy > energy + MONOTONE_TOL:
            ansatz.steps = previous
            trace.append(IterationRecord(it, energy, float("nan"), chosen,
                                         [pool.labels[k] for k in chosen], ansatz.n_params,
                                         n_grad, "energy_increase_reverted"))
            status = "stalled"
            break
        ansatz = ansatz.with_thetas(res.thetas)
        state = ansatz.prepare(backend)
        energy = float(res.energy)
        trace.append(IterationRecord(it, energy, float("nan"), chosen,
                                     [pool.labels[k] for k in chosen], ansatz.n_params, n_grad, flag))
    if status == "max_iter":
        # one last sweep so the final entry carries a gradient norm
        grads = _pool_gradients(backend, state, h, pool, opts, opts.max_iter + 1)
        n_grad += len(pool)
        trace[-1].max_gradient = float(np.max(np.abs(grads)))
        if trace[-1].max_gradient < opts.grad_tol:
            status = "converged"
    return VqeResult(method, energy, ansatz.thetas, trace, cnot_summary(ansatz),
                     backend_metadata(backend), status, n_grad, ansatz)


# ---------------------------------------------------------------------------
# Overlap-ADAPT
# ---------------------------------------------------------------------------

@dataclass
class OverlapOptions:
    """Settings for :func:`overlap_adapt`.

    Attributes
    ----------
    target_overlap : float
        Stop once ``|<target|psi>|**2`` reaches this value.
    stall_tol : float
        Stop (status ``stalled``) when one iteration gains less than this.
    grad_tol : float
        Stop when no pool operator has a larger overlap gradient.
    """

    target_overlap: float = 1.0 - 1e-10
    stall_tol: float = 1e-10
    grad_tol: float = 1e-8
    max_iter: int = 100
    gtol: float = 1e-9
    fd_step: float = 1e-6


def _overlap_value_grad(ansatz, target, backend, x, fd_step):
    if backend.supports_adjoint:
        return adjoint_gradient(ansatz, None, backend, x, target=target)

    def f(y):
        return float(abs(backend.inner(target, ansatz.prepare(backend, y))) ** 2)

    g = np.empty(x.size)
    for k in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[k] += fd_step
        xm[k] -= fd_step
        g[k] = (f(xp) - f(xm)) / (2 * fd_step)
    return f(x), g


def overlap_adapt(target, pool, backend, opts=None, reference=0):
    """Grow an ansatz maximizing the overlap with a target state.

    The selection score for a candidate ``G`` is
    ``d|<t|psi>|**2/dtheta = 2 Re(conj(<t|psi>) <t|G psi>)`` at zero angle;
    all angles are then re-optimized jointly.

    Returns
    -------
    AnsatzCircuit
        With ``info`` holding ``overlap``, ``trace`` and ``status``.
    """
    opts = opts or OverlapOptions()
    if isinstance(target, np.ndarray):
        target = backend.from_dense(target)
    nrm = abs(backend.inner(target, target))
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError("target state must be normalized")
    ansatz = AnsatzCircuit(reference, pool)
    state = ansatz.prepare(backend)
    ov = backend.inner(target, state)
    value = float(abs(ov) ** 2)
    trace = [value]
    selected = []
    status = "max_iter"
    for it in range(opts.max_iter):
        if value >= opts.target_overlap:
            status = "converged"
            break
        tpsi = [backend.inner(target, backend.apply_pauli_sum(state, g)) for g in pool.generators]
        scores = np.array([2.0 * (np.conj(ov) * t).real for t in tpsi])
        k = mb_adapt_step(scores, 1)[0]
        if abs(scores[k]) < opts.grad_tol:
            status = "gradient"
            break
        ansatz.append(k, 0.0)
        x0 = ansatz.thetas
        cache = {}

        def fg(x):
            key = x.tobytes()
            if key not in cache:
                cache.clear()
                v, g = _overlap_value_grad(ansatz, target, backend, x, opts.fd_step)
                cache[key] = (-v, -g)
            return cache[key]

        res = scipy.optimize.minimize(lambda x: fg(x)[0], x0, jac=lambda x: fg(x)[1],
                                      method="BFGS", options={"gtol": opts.gtol})
        new_value = -float(res.fun)
        if new_value < value:
            # keep the warm start, which reproduces the previous overlap
            new_value, res.x = value, x0
        ansatz = ansatz.with_thetas(res.x)
        state = ansatz.prepare(backend)
        ov = backend.inner(target, state)
        gain = new_value - value
        value = float(abs(ov) ** 2)
        trace.append(value)
        selected.append(k)
        if gain < opts.stall_tol and value < opts.target_overlap:
            status = "stalled"
            break
    ansatz.info.update(overlap=value, trace=trace, status=status, selected=selected)
    return ansatz
