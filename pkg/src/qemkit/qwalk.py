"""Markov-chain Monte Carlo primitives: chain analysis, Szegedy walks,
stationary-state preparation and amplitude estimation of ``E_pi(f)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .kernels import impl as _k
from .rng import make_rng

STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-10
BALANCE_TOL = 1e-10


@dataclass
class MarkovChainSpec:
    """Finite chain with transition matrix ``P``, stationary ``pi`` and ``f``.

    ``pi`` is computed from the leading left eigenvector when omitted and
    ``f`` defaults to zero.
    """

    P: np.ndarray
    pi: np.ndarray = None
    f: np.ndarray = None

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise ValueError("P must be a non-empty square matrix")
        if np.any(P < -STOCHASTIC_TOL) or np.max(np.abs(P.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise ValueError("P is not row-stochastic")
        self.P = np.clip(P, 0.0, None)
        if self.pi is None:
            self.pi = stationary_distribution(self.P)
        self.pi = np.asarray(self.pi, dtype=float)
        if self.pi.shape != (self.d,) or np.any(self.pi < -STATIONARY_TOL):
            raise ValueError("pi must be a probability vector of length d")
        if abs(self.pi.sum() - 1.0) > STATIONARY_TOL:
            raise ValueError("pi must sum to one")
        if np.max(np.abs(self.pi @ self.P - self.pi)) > STATIONARY_TOL:
            raise ValueError("pi is not stationary for P")
        self.f = np.zeros(self.d) if self.f is None else np.asarray(self.f, dtype=float)
        if self.f.shape != (self.d,) or np.any(self.f < 0) or np.any(self.f > 1):
            raise ValueError("f must map states to [0, 1]")

    @property
    def d(self):
        return self.P.shape[0]

    @property
    def mean(self):
        """``E_pi(f)``."""
        return float(self.pi @ self.f)

    def is_reversible(self, tol=BALANCE_TOL):
        flow = self.pi[:, None] * self.P
        return bool(np.max(np.abs(flow - flow.T)) <= tol)

    def to_json(self):
        return {"P": self.P.tolist(), "pi": self.pi.tolist(), "f": self.f.tolist()}

    @classmethod
    def from_json(cls, d):
        if isinstance(d, str):
            d = json.loads(d)
        return cls(np.array(d["P"], dtype=float), None if d.get("pi") is None else np.array(d["pi"]),
                   None if d.get("f") is None else np.array(d["f"], dtype=float))


def bundled_chains():
    """Names of the chains shipped in ``qemkit/data/chain_*.json``."""
    root = Path(str(resources.files("qemkit") / "data"))
    return sorted(p.stem[len("chain_"):] for p in root.glob("chain_*.json"))


def load_chain(name):
    """Load a bundled chain by name, or any chain JSON file by path."""
    p = Path(name)
    if not p.exists():
        p = Path(str(resources.files("qemkit") / "data" / f"chain_{name}.json"))
    return MarkovChainSpec.from_json(json.loads(p.read_text()))


def stationary_distribution(P):
    w, v = np.linalg.eig(np.asarray(P, dtype=float).T)
    k = int(np.argmin(np.abs(w - 1.0)))
    pi = np.abs(np.real(v[:, k]))
    return pi / pi.sum()


def symmetric_chain(p):
    """Two states, flip probability ``p``."""
    return MarkovChainSpec(np.array([[1 - p, p], [p, 1 - p]]), np.array([0.5, 0.5]))


def two_state_chain(pi1, f=None):
    """Reversible two-state chain with stationary ``(1 - pi1, pi1)`` (rows equal ``pi``)."""
    pi = np.array([1 - pi1, pi1])
    return MarkovChainSpec(np.tile(pi, (2, 1)), pi, f)


def metropolis_chain(weights, f=None):
    """Metropolis chain on a ring targeting ``weights`` (uniform proposal of a neighbour)."""
    w = np.asarray(weights, dtype=float)
    pi = w / w.sum()
    d = pi.size
    P = np.zeros((d, d))
    for x in range(d):
        for y in {(x - 1) % d, (x + 1) % d} - {x}:
            P[x, y] += 0.5 * min(1.0, pi[y] / pi[x])
        P[x, x] = 1.0 - P[x].sum()
    return MarkovChainSpec(P, pi, f)


@dataclass
class ChainAnalysis:
    gap: float
    reversible: bool
    eigenvalues: np.ndarray


def analyze_chain(c):
    """Spectral gap ``1 - |lambda_2|`` and the detailed-balance flag."""
    ev = np.linalg.eigvals(c.P)
    mags = np.sort(np.abs(ev))[::-1]
    gap = 1.0 - (mags[1] if mags.size > 1 else 0.0)
    if c.d == 1:
        gap = 1.0
    return ChainAnalysis(float(max(gap, 0.0)), c.is_reversible(), ev[np.argsort(-np.abs(ev))])


# ---------------------------------------------------------------------------
# state preparation
# ---------------------------------------------------------------------------

def _n_bits(d):
    return max(1, math.ceil(math.log2(d))) if d > 1 else 1


def ry_cascade(amplitudes):
    """Angles of a uniformly controlled ``RY`` cascade preparing real ``amplitudes >= 0``.

    Level ``l`` (most significant bit first) holds ``2**l`` angles, one per
    value of the already-prepared prefix.
    """
    a = np.asarray(amplitudes, dtype=float)
    n = _n_bits(a.size)
    full = np.zeros(1 << n)
    full[: a.size] = a
    levels = []
    for lvl in range(n):
        blocks = full.reshape(1 << lvl, 2, -1)
        w0 = np.linalg.norm(blocks[:, 0, :], axis=1)
        w1 = np.linalg.norm(blocks[:, 1, :], axis=1)
        levels.append(2.0 * np.arctan2(w1, w0))
    return levels


def apply_ry_cascade(levels):
    """State produced by :func:`ry_cascade` angles acting on ``|0...0>``."""
    vec = np.ones(1)
    for angles in levels:
        c, s = np.cos(angles / 2), np.sin(angles / 2)
        vec = np.stack([vec * c, vec * s], axis=1).reshape(-1)
    return vec


def prepare_stationary(c):
    """Cascade ``V`` with ``V|0> = sum_x sqrt(pi_x) |x>``; returns ``(levels, state)``."""
    levels = ry_cascade(np.sqrt(np.clip(c.pi, 0.0, None)))
    return levels, apply_ry_cascade(levels)


# ---------------------------------------------------------------------------
# Szegedy walk
# ---------------------------------------------------------------------------

def _householder(target):
    """Real orthogonal ``H`` with ``H e_0 = target`` (unit ``target``)."""
    t = np.asarray(target, dtype=float)
    e0 = np.zeros_like(t)
    e0[0] = 1.0
    u = e0 - t
    nu = np.linalg.norm(u)
    if nu < 1e-15:
        return np.eye(t.size)
    u /= nu
    return np.eye(t.size) - 2.0 * np.outer(u, u)


@dataclass
class WalkOperator:
    """``W = R_B R_A`` on the edge register ``|x>|y>`` (``x`` most significant).

    ``R_A = 2 Pi_A - 1`` reflects about ``span{|x>|p_x>}`` with
    ``|p_x> = sum_y sqrt(P_xy) |y>``; ``R_B = SWAP R_A SWAP``.  The gate
    sequence is ``U_A^dag, Z_0, U_A, SWAP, U_A^dag, Z_0, U_A, SWAP`` where
    ``U_A`` is the multiplexed isometry ``|x>|0> -> |x>|p_x>`` and ``Z_0``
    the reflection ``2|0><0| - 1`` on the second register.
    """

    chain: MarkovChainSpec
    n_bits: int
    sqrtP: np.ndarray

    @property
    def dim(self):
        return 1 << self.n_bits

    @property
    def n_register_qubits(self):
        return 2 * self.n_bits

    def _reflect_a(self, M):
        c = np.sum(self.sqrtP * M, axis=1)
        return 2.0 * c[:, None] * self.sqrtP - M

    def apply(self, vec):
        """``W v`` for a vector on ``2 n_bits`` qubits."""
        M = np.asarray(vec, dtype=np.complex128).reshape(self.dim, self.dim)
        M = self._reflect_a(M)
        M = self._reflect_a(M.T).T
        return M.reshape(-1)

    def gates(self):
        """Dense stages of the gate sequence, in application order."""
        D = self.dim
        UA = np.zeros((D * D, D * D))
        for x in range(D):
            UA[x * D:(x + 1) * D, x * D:(x + 1) * D] = _householder(self.sqrtP[x])
        Z0 = np.kron(np.eye(D), 2.0 * np.outer(np.eye(D)[0], np.eye(D)[0]) - np.eye(D))
        swap = np.zeros((D * D, D * D))
        for x in range(D):
            for y in range(D):
                swap[y * D + x, x * D + y] = 1.0
        return [("UA_dag", UA.T), ("Z0", Z0), ("UA", UA), ("SWAP", swap),
                ("UA_dag", UA.T), ("Z0", Z0), ("UA", UA), ("SWAP", swap)]

    def matrix(self):
        out = np.eye(self.dim * self.dim)
        for _, g in self.gates():
            out = g @ out
        return out

    def stationary_state(self):
        """Coherent encoding ``sum_x sqrt(pi_x) |x> |p_x>``."""
        M = np.sqrt(np.clip(self._pad(self.chain.pi), 0.0, None))[:, None] * self.sqrtP
        return M.reshape(-1).astype(np.complex128)

    def _pad(self, v):
        out = np.zeros(self.dim)
        out[: v.size] = v
        return out


def szegedy_walk(c):
    """Szegedy quantization of a reversible chain.

    Chains whose size is not a power of two are padded with absorbing
    dummy states of zero stationary mass.
    """
    if not c.is_reversible():
        raise ValueError("Szegedy walk needs a reversible chain (detailed balance fails)")
    n = _n_bits(c.d)
    D = 1 << n
    P = np.eye(D)
    P[: c.d, : c.d] = c.P
    return WalkOperator(c, n, np.sqrt(P))


def walk_phases(c):
    """Predicted eigenphases ``+-2 arccos(lambda)`` from the discriminant spectrum."""
    Dm = np.sqrt(c.P * c.P.T)
    lam = np.clip(np.linalg.eigvalsh(0.5 * (Dm + Dm.T)), -1.0, 1.0)
    return np.arccos(lam) * 2.0


# ---------------------------------------------------------------------------
# a known walk eigenstate on six qubits
# ---------------------------------------------------------------------------

FIXED_POINT_INDICES = (10, 12, 18, 20, 42, 44, 50, 52)
# new qubit k is label qubit FIXED_POINT_PERMUTATION[k]: y0, y1, x0, x1, then the
# spectators in |0> and |+>
FIXED_POINT_PERMUTATION = (2, 1, 4, 3, 0, 5)


def fixed_point_state():
    v = np.zeros(64, dtype=np.complex128)
    v[list(FIXED_POINT_INDICES)] = 1.0 / math.sqrt(8.0)
    return v


def fixed_point_chain():
    """Symmetric ``p = 1/2`` chain on states 1 and 2 of a four-state space.

    States 0 and 3 are absorbing with zero stationary mass.
    """
    P = np.array([[1.0, 0, 0, 0], [0, 0.5, 0.5, 0], [0, 0.5, 0.5, 0], [0, 0, 0, 1.0]])
    return MarkovChainSpec(P, np.array([0.0, 0.5, 0.5, 0.0]))


def permute_qubits(vec, perm):
    """Reorder qubits: new qubit ``k`` is old qubit ``perm[k]`` (qubit 0 = LSB)."""
    n = len(perm)
    t = np.asarray(vec).reshape((2,) * n)
    # axis a of the reshaped tensor holds qubit n - 1 - a
    axes = [n - 1 - perm[n - 1 - a] for a in range(n)]
    return np.transpose(t, axes).reshape(-1)


def fixed_point_check():
    """Residual ``||W v - v||`` of the six-qubit reference state under the padded walk.

    The walk acts on four of the six qubits (after ``FIXED_POINT_PERMUTATION``)
    and as the identity on the two spectators.  Returns
    ``(residual, walk_state, v_permuted)``.
    """
    walk = szegedy_walk(fixed_point_chain())
    v = permute_qubits(fixed_point_state(), FIXED_POINT_PERMUTATION)
    # high qubits (4, 5) are spectators; the low four carry |x>|y>
    blocks = v.reshape(4, 16)
    out = np.stack([walk.apply(b) for b in blocks]).reshape(-1)
    return float(np.linalg.norm(out - v)), out, v


# ---------------------------------------------------------------------------
# amplitude estimation
# ---------------------------------------------------------------------------

def _marking_unitary(c):
    """``A``: ``|0>|0> -> sum_x sqrt(pi_x) |x> (sqrt(1-f_x)|0> + sqrt(f_x)|1>)``.

    The ancilla is the least significant qubit.
    """
    n = _n_bits(c.d)
    D = 1 << n
    amp = np.zeros(D)
    amp[: c.d] = np.sqrt(np.clip(c.pi, 0.0, None))
    V = _householder(amp)
    f = np.zeros(D)
    f[: c.d] = c.f
    A = np.zeros((2 * D, 2 * D))
    for x in range(D):
        s, co = math.sqrt(f[x]), math.sqrt(1.0 - f[x])
        A[2 * x:2 * x + 2, 2 * x:2 * x + 2] = [[co, -s], [s, co]]
    return A @ np.kron(V, np.eye(2))


def grover_operator(c):
    """``Q = -A S_0 A^dag S_chi`` with ``S_chi`` flipping the good (ancilla 1) states."""
    A = _marking_unitary(c)
    dim = A.shape[0]
    s_chi = np.diag([(-1.0) ** (k & 1) for k in range(dim)])
    s0 = np.eye(dim)
    s0[0, 0] = -1.0
    return -A @ s0 @ A.T @ s_chi, A


def ae_probabilities(c, m):
    """Outcome probabilities of canonical amplitude estimation, by emulation.

    The phase register (``m`` qubits) controls ``Q**(2**j)``; its inverse
    QFT read-out ``k`` maps to the estimate ``sin(pi k / 2**m)**2``.
    """
    if m < 1:
        raise ValueError("need at least one phase bit")
    Q, A = grover_operator(c)
    dim = A.shape[0]
    M = 1 << m
    psi = A[:, 0].astype(np.complex128)
    # |phase k> (x) Q^k |psi> after the Hadamards and controlled powers
    branches = np.empty((M, dim), dtype=np.complex128)
    cur = psi
    for k in range(M):
        branches[k] = cur
        cur = Q @ cur
    branches /= math.sqrt(M)
    # inverse QFT on the phase register
    F = np.exp(-2j * math.pi * np.outer(np.arange(M), np.arange(M)) / M) / math.sqrt(M)
    out = F @ branches
    return np.sum(np.abs(out) ** 2, axis=1)


@dataclass
class AeResult:
    histogram: dict
    probabilities: dict
    shots: int
    postselected: int
    mean: float

    @property
    def modal(self):
        return max(self.histogram.items(), key=lambda kv: (kv[1], -kv[0]))[0]

    def to_json(self):
        return {"histogram": {f"{k:.12g}": v for k, v in sorted(self.histogram.items())},
                "probabilities": {f"{k:.12g}": v for k, v in sorted(self.probabilities.items())},
                "shots": self.shots, "postselected": self.postselected, "mean": self.mean}


def estimate_mean(c, m=2, shots=1000, seed=0, backend=None):
    """Amplitude estimation of ``E_pi(f)``; returns a histogram over estimates.

    The circuit is emulated densely (state register, marking ancilla and
    ``m`` phase qubits).  Preparation is noiseless, so every shot passes
    the success post-selection; the count is recorded as ``postselected``.
    """
    if backend not in (None, "dense") and getattr(backend, "name", None) != "dense":
        raise ValueError("amplitude estimation is emulated densely")
    probs = ae_probabilities(c, m)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    M = 1 << m
    est = np.array([round(math.sin(math.pi * k / M) ** 2, 12) for k in range(M)])
    counts = make_rng(seed, "ae").multinomial(int(shots), probs)
    hist, dist = {}, {}
    for e, n, p in zip(est, counts, probs):
        e = float(e)
        dist[e] = dist.get(e, 0.0) + float(p)
        if n:
            hist[e] = hist.get(e, 0) + int(n)
    return AeResult(hist, dist, int(shots), int(shots), c.mean)


def total_variation(hist, dist, shots):
    keys = set(hist) | set(dist)
    return 0.5 * sum(abs(hist.get(k, 0) / shots - dist.get(k, 0.0)) for k in keys)


def classical_mcmc_mean(c, steps, seed=0, x0=None):
    """Time average of ``f`` along a simulated trajectory of ``steps`` moves.

    The start state is drawn from ``pi`` unless ``x0`` is given.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = make_rng(seed, "mcmc")
    if x0 is None:
        x0 = int(rng.choice(c.d, p=c.pi / c.pi.sum()))
    cum = np.cumsum(c.P, axis=1)
    cum[:, -1] = 1.0
    uniforms = rng.random(int(steps))
    total, _ = _k.markov_walk(np.ascontiguousarray(cum), np.ascontiguousarray(c.f, dtype=float),
                              int(x0), uniforms)
    return float(total) / steps
