"""Water placement as a QUBO: density grids, candidate sites, solvers, scoring.

A site set ``x`` is scored by ``||rho - sum_i x_i g_i||**2`` with fixed-width
normalized Gaussians ``g_i``; expanding over binary ``x`` gives the cost
``C(x) = x^T Q x`` (plus the constant ``||rho||**2``) with
``Q_ii = <g_i, g_i> - 2 <rho, g_i>`` and ``Q_ij = <g_i, g_j>``.
"""
from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.ndimage

from .kernels import impl as _k
from .pauli import PauliSum, qubo_to_ising
from .rng import make_rng
from .statevector import DenseState, SparseState, trotter_evolve

BOHR_TO_ANGSTROM = 0.529177210903
DEFAULT_SIGMA = 0.5
DEFAULT_MATCH_RADIUS = 1.0
EXACT_MAX_VARS = 25
ADIABATIC_MAX_VARS = 16
COST_TOL = 1e-10


# ---------------------------------------------------------------------------
# density grids
# ---------------------------------------------------------------------------

@dataclass
class DensityGrid:
    """Scalar density sampled on a (possibly skewed) regular grid.

    Attributes
    ----------
    origin : ndarray (3,)
        Position of voxel ``(0, 0, 0)`` in Angstrom.
    axes : ndarray (3, 3)
        Row ``k`` is the step vector along grid axis ``k`` (Angstrom).
    values : ndarray (nx, ny, nz)
    clamped : int
        Number of negative samples set to zero on construction.
    """

    origin: np.ndarray
    axes: np.ndarray
    values: np.ndarray
    clamped: int = 0
    atoms: list = field(default_factory=list)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        self.axes = np.asarray(self.axes, dtype=float).reshape(3, 3)
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 3:
            raise ValueError("density values must be a 3-D array")
        if abs(np.linalg.det(self.axes)) < 1e-12:
            raise ValueError("grid axes are linearly dependent")
        neg = vals < 0
        if neg.any():
            self.clamped += int(neg.sum())
            vals[neg] = 0.0
            warnings.warn(f"{int(neg.sum())} negative density samples clamped to zero", stacklevel=2)
        self.values = vals

    @property
    def shape(self):
        return self.values.shape

    @property
    def voxel_volume(self):
        return float(abs(np.linalg.det(self.axes)))

    @property
    def orthogonal(self):
        g = self.axes @ self.axes.T
        return bool(np.allclose(g - np.diag(np.diag(g)), 0.0, atol=1e-10))

    @property
    def spacing(self):
        return np.linalg.norm(self.axes, axis=1)

    def points(self):
        """Voxel positions, shape ``(nx, ny, nz, 3)``."""
        idx = np.indices(self.shape, dtype=float)
        return self.origin + np.tensordot(np.moveaxis(idx, 0, -1), self.axes, axes=1)

    def position(self, index):
        return self.origin + np.asarray(index, dtype=float) @ self.axes

    def weights(self):
        """Trapezoidal quadrature weights (times the voxel volume)."""
        w = [np.ones(n) for n in self.shape]
        for v in w:
            if v.size > 1:
                v[0] = v[-1] = 0.5
        return np.einsum("i,j,k->ijk", *w) * self.voxel_volume

    def integrate(self, f=None):
        """Trapezoidal integral of the density (or of an array ``f``)."""
        f = self.values if f is None else f
        out = f
        for _ in range(3):
            out = scipy.integrate.trapezoid(out, axis=0) if out.shape[0] > 1 else out[0]
        return float(out) * self.voxel_volume

    def inner(self, a, b):
        return float(np.sum(self.weights() * a * b))


def make_grid(lower, upper, spacing):
    """Empty orthogonal grid covering the box ``[lower, upper]``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = np.floor((upper - lower) / spacing + 1e-9).astype(int) + 1
    return DensityGrid(lower, np.eye(3) * spacing, np.zeros(tuple(n)))


def gaussian_on_grid(grid, center, sigma=DEFAULT_SIGMA, mass=1.0):
    """Isotropic Gaussian of total ``mass`` evaluated on the grid points."""
    d2 = np.sum((grid.points() - np.asarray(center, dtype=float)) ** 2, axis=-1)
    return mass * (2 * math.pi * sigma**2) ** -1.5 * np.exp(-0.5 * d2 / sigma**2)


def gaussian_density(grid, centers, sigma=DEFAULT_SIGMA, masses=None):
    """Grid with values ``sum_k m_k g(r - c_k)``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    masses = np.ones(len(centers)) if masses is None else np.asarray(masses, dtype=float)
    vals = np.zeros(grid.shape)
    for c, m in zip(centers, masses):
        vals += gaussian_on_grid(grid, c, sigma, m)
    return DensityGrid(grid.origin, grid.axes, vals)


# ---------------------------------------------------------------------------
# cube files
# ---------------------------------------------------------------------------

def save_cube(grid, path, comment="qemkit density"):
    """Write a Gaussian cube file in Angstrom units (negative voxel counts).

    Values use 17 significant digits so a save/load cycle is bit-exact.
    """
    lines = [comment, "values in Angstrom^-3"]
    lines.append(f"{len(grid.atoms):5d} " + " ".join(f"{v:.17g}" for v in grid.origin))
    for n, ax in zip(grid.shape, grid.axes):
        lines.append(f"{-n:5d} " + " ".join(f"{v:.17g}" for v in ax))
    for z, q, pos in grid.atoms:
        lines.append(f"{int(z):5d} {q:.17g} " + " ".join(f"{v:.17g}" for v in pos))
    flat = grid.values.reshape(-1)
    for i in range(0, flat.size, 6):
        lines.append(" ".join(f"{v:.16e}" for v in flat[i:i + 6]))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


def load_density(path):
    """Read a Gaussian cube file into a :class:`DensityGrid` (Angstrom).

    Positive voxel counts mean Bohr units and are converted; negative
    counts mean Angstrom.  Non-orthogonal axes are accepted and reported by
    ``DensityGrid.orthogonal``.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    try:
        head = lines[2].split()
        natoms = int(head[0])
        origin = np.array([float(v) for v in head[1:4]])
        shape, axes, bohr = [], [], []
        for k in range(3):
            parts = lines[3 + k].split()
            n = int(parts[0])
            shape.append(abs(n))
            axes.append([float(v) for v in parts[1:4]])
            bohr.append(n > 0)
        atoms = []
        for k in range(abs(natoms)):
            parts = lines[6 + k].split()
            atoms.append((int(parts[0]), float(parts[1]), np.array([float(v) for v in parts[2:5]])))
        body = 6 + abs(natoms)
        if natoms < 0:
            # dataset identifiers: a count followed by that many ids
            tokens = lines[body].split()
            need = int(tokens[0]) + 1
            body += 1
            while len(tokens) < need:
                tokens += lines[body].split()
                body += 1
        vals = np.array(" ".join(lines[body:]).split(), dtype=float)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed cube file: {exc}") from None
    if len(set(bohr)) != 1:
        raise ValueError("malformed cube file: mixed length units")
    if any(n == 0 for n in shape) or len(origin) != 3 or any(len(a) != 3 for a in axes):
        raise ValueError("malformed cube file header")
    if vals.size != shape[0] * shape[1] * shape[2]:
        raise ValueError(f"malformed cube file: expected {np.prod(shape)} values, found {vals.size}")
    axes = np.array(axes)
    scale = BOHR_TO_ANGSTROM if bohr[0] else 1.0
    values = vals.reshape(shape)
    if bohr[0]:
        # density per bohr^3 to per angstrom^3
        values = values / scale**3
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        grid = DensityGrid(origin * scale, axes * scale, values,
                           atoms=[(z, q, p * scale) for z, q, p in atoms])
    if caught:
        warnings.warn(str(caught[0].message), stacklevel=2)
    return grid


# ---------------------------------------------------------------------------
# candidate sites and the QUBO
# ---------------------------------------------------------------------------

@dataclass
class CandidateSites:
    positions: np.ndarray
    sigma: float = DEFAULT_SIGMA
    exclusion_radius: float = 2.0
    density: np.ndarray = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if self.density is None:
            self.density = np.zeros(len(self.positions))

    def __len__(self):
        return len(self.positions)

    def to_json(self):
        return {"positions": self.positions.tolist(), "sigma": self.sigma,
                "exclusion_radius": self.exclusion_radius, "density": np.asarray(self.density).tolist()}

    @classmethod
    def from_json(cls, d):
        return cls(np.array(d["positions"], dtype=float).reshape(-1, 3), d["sigma"],
                   d["exclusion_radius"], np.asarray(d.get("density", []), dtype=float) if d.get("density") else None)


def propose_sites(grid, threshold, min_sep=2.0, sigma=DEFAULT_SIGMA, exclusion_radius=None, max_sites=None):
    """Local density maxima above ``threshold``, greedily thinned to ``min_sep``.

    Sites are ordered by decreasing density; a site is dropped if it lies
    within ``min_sep`` of an already accepted one.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    v = grid.values
    peak = scipy.ndimage.maximum_filter(v, size=3, mode="constant", cval=-np.inf)
    idx = np.argwhere((v >= peak) & (v > threshold))
    dens = v[tuple(idx.T)]
    order = np.lexsort((np.arange(len(idx)), -dens))
    chosen, pos = [], []
    for k in order:
        p = grid.position(idx[k])
        if all(np.linalg.norm(p - q) >= min_sep for q in pos):
            chosen.append(k)
            pos.append(p)
            if max_sites is not None and len(pos) >= max_sites:
                break
    radius = min_sep if exclusion_radius is None else exclusion_radius
    return CandidateSites(np.array(pos).reshape(-1, 3), sigma, radius, dens[chosen])


@dataclass
class QuboProblem:
    """``C(x) = x^T Q x + offset`` over binary ``x``.

    Attributes
    ----------
    Q : ndarray (N, N)
        Symmetric; the off-diagonal pair ``(i, j)`` contributes ``2 Q_ij``.
    offset : float
        ``||rho||**2``, so ``cost + offset`` is the squared L2 residual.
    sites : CandidateSites or None
    blocked : list of (int, int)
        Pairs closer than the exclusion radius.
    """

    Q: np.ndarray
    offset: float = 0.0
    sites: CandidateSites = None
    blocked: list = field(default_factory=list)
    blockade_penalty: float = 0.0

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        if self.Q.ndim != 2 or self.Q.shape[0] != self.Q.shape[1] or self.Q.shape[0] < 1:
            raise ValueError("Q must be a non-empty square matrix")
        if not np.allclose(self.Q, self.Q.T, atol=1e-12, rtol=0):
            raise ValueError("Q must be symmetric")

    @property
    def n(self):
        return self.Q.shape[0]

    def cost(self, x):
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x)

    def all_costs(self):
        """Cost of every assignment, index ``sum_i x_i 2**i`` (``N <= 25``)."""
        n = self.n
        if n > EXACT_MAX_VARS:
            raise ValueError("too many variables for enumeration")
        masks = np.arange(1 << n, dtype=np.int64)
        costs = np.zeros(masks.size)
        diag = np.diag(self.Q)
        for i in range(n):
            bi = (masks >> i) & 1
            costs += diag[i] * bi
            for j in range(i + 1, n):
                if self.Q[i, j] != 0.0:
                    costs += 2.0 * self.Q[i, j] * (bi & (masks >> j) & 1)
        return costs

    def to_json(self):
        n = self.n
        return {
            "n": n,
            "lower_triangle": [self.Q[i, : i + 1].tolist() for i in range(n)],
            "offset": self.offset,
            "blocked": [list(p) for p in self.blocked],
            "blockade_penalty": self.blockade_penalty,
            "sites": None if self.sites is None else self.sites.to_json(),
        }

    @classmethod
    def from_json(cls, d):
        n = int(d["n"])
        Q = np.zeros((n, n))
        for i, row in enumerate(d["lower_triangle"]):
            if len(row) != i + 1:
                raise ValueError("malformed lower triangle")
            Q[i, : i + 1] = row
            Q[: i + 1, i] = row
        sites = None if d.get("sites") is None else CandidateSites.from_json(d["sites"])
        return cls(Q, float(d.get("offset", 0.0)), sites, [tuple(p) for p in d.get("blocked", [])],
                   float(d.get("blockade_penalty", 0.0)))


def blockade_bound(diag):
    """Penalty above which no optimum keeps an excluded pair: ``2 max|Q_ii| N``."""
    diag = np.asarray(diag, dtype=float)
    return 2.0 * float(np.max(np.abs(diag))) * diag.size


def build_qubo(grid, sites, blockade_penalty=None):
    """QUBO of the L2 mismatch between the density and the chosen Gaussians.

    All inner products use trapezoidal grid quadrature.  Pairs of sites
    closer than ``sites.exclusion_radius`` receive ``Q_ij += penalty``; the
    default penalty is 10% above :func:`blockade_bound`.
    """
    n = len(sites)
    if n < 1:
        raise ValueError("need at least one candidate site")
    if sites.sigma < float(np.max(grid.spacing)):
        warnings.warn("Gaussian width is below the grid spacing; quadrature is unreliable", stacklevel=2)
    w = grid.weights()
    gs = np.stack([gaussian_on_grid(grid, p, sites.sigma).ravel() for p in sites.positions])
    wr = (w * grid.values).ravel()
    # einsum (no BLAS) keeps the reduction order independent of thread count
    G = np.einsum("ik,jk->ij", gs * w.ravel(), gs)
    rho_g = np.einsum("ik,k->i", gs, wr)
    Q = G.copy()
    Q[np.diag_indices(n)] = np.diag(G) - 2.0 * rho_g
    Q = 0.5 * (Q + Q.T)
    d = np.linalg.norm(sites.positions[:, None, :] - sites.positions[None, :, :], axis=-1)
    blocked = [(i, j) for i in range(n) for j in range(i + 1, n) if d[i, j] < sites.exclusion_radius]
    penalty = 1.1 * blockade_bound(np.diag(Q)) if blockade_penalty is None else float(blockade_penalty)
    for i, j in blocked:
        Q[i, j] += penalty
        Q[j, i] += penalty
    offset = float(np.einsum("k,k->", wr, grid.values.ravel()))
    return QuboProblem(Q, offset, sites, blocked, penalty if blocked else 0.0)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

@dataclass
class PlacementSolution:
    x: np.ndarray
    cost: float
    solver: str
    wall_time: float
    info: dict = field(default_factory=dict)

    @property
    def selected(self):
        return np.flatnonzero(self.x)

    def to_json(self):
        return {"x": [int(v) for v in self.x], "cost": self.cost, "solver": self.solver,
                "wall_time": self.wall_time, "info": self.info}


def _bits(mask, n):
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=np.int8)


def solve_exact(q):
    """Global optimum by exhaustive enumeration (lowest index on ties)."""
    if q.n > EXACT_MAX_VARS:
        raise ValueError(f"exhaustive solver handles at most {EXACT_MAX_VARS} variables")
    t0 = time.perf_counter()
    best, mask = _k.qubo_exhaustive(np.ascontiguousarray(q.Q), COST_TOL * 1e-2)
    x = _bits(int(mask), q.n)
    return PlacementSolution(x, q.cost(x), "exact", time.perf_counter() - t0)


@dataclass
class AnnealSchedule:
    """Geometric inverse-temperature ramp over ``sweeps`` full sweeps.

    ``beta_hot``/``beta_cold`` default to values derived from ``Q``: the
    largest single-flip change is accepted with probability 1/2 at the
    start, the smallest nonzero change with probability 1/100 at the end.
    """

    sweeps: int = 1000
    beta_hot: float | None = None
    beta_cold: float | None = None

    def betas(self, Q):
        diag = np.abs(np.diag(Q))
        off = 2.0 * np.abs(Q - np.diag(np.diag(Q)))
        max_delta = float(np.max(diag + off.sum(axis=1)))
        nz = np.concatenate([diag[diag > 0], off[off > 0]])
        min_delta = float(nz.min()) if nz.size else 1.0
        hot = self.beta_hot if self.beta_hot is not None else math.log(2) / max(max_delta, 1e-300)
        cold = self.beta_cold if self.beta_cold is not None else math.log(100) / max(min_delta, 1e-300)
        cold = max(cold, hot)
        return np.geomspace(hot, cold, self.sweeps)


def solve_sa(q, schedule=None, seed=0):
    """Single-flip Metropolis annealing; returns the best assignment seen.

    The random start and all acceptance draws come from the ``seed``
    stream, so a seed fully determines the run.
    """
    schedule = schedule or AnnealSchedule()
    t0 = time.perf_counter()
    rng = make_rng(seed, "sa")
    betas = schedule.betas(q.Q)
    x0 = rng.integers(0, 2, q.n).astype(np.int8)
    uniforms = rng.random((betas.size, q.n))
    bx, best, trace = _k.qubo_anneal(np.ascontiguousarray(q.Q), x0, betas, uniforms)
    x = np.asarray(bx, dtype=np.int8)
    return PlacementSolution(x, q.cost(x), "sa", time.perf_counter() - t0,
                             {"seed": seed, "best_trace": np.asarray(trace).tolist()})


def adiabatic_hamiltonian(q, normalize=True):
    """Ising ``PauliSum`` of the QUBO and the scale it was divided by."""
    h = qubo_to_ising(q).to_pauli_sum()
    scale = 1.0
    if normalize:
        nontrivial = (h.xs != 0) | (h.zs != 0)
        if nontrivial.any():
            scale = float(np.max(np.abs(h.coeffs[nontrivial])))
    return h.scale(1.0 / scale) if scale != 1.0 else h, scale


def solve_adiabatic(q, total_time=20.0, steps=400, backend=None, shots=1000, seed=0, schedule=None):
    """Trotterized adiabatic sweep from ``|+...+>`` to the Ising ground state.

    ``H(s) = -(1 - s) sum_i X_i + s H_Ising / scale`` with ``s = schedule(t/T)``
    (linear by default).  ``|+...+>`` is the ground state of ``-sum X``, so
    the driver carries a minus sign.  The returned assignment is the most
    frequent of ``shots`` sampled bitstrings; ``info`` records the
    probability of the exact optimum.
    """
    n = q.n
    if n > ADIABATIC_MAX_VARS:
        raise ValueError(f"adiabatic emulation handles at most {ADIABATIC_MAX_VARS} variables")
    schedule = schedule or (lambda s: s)
    t0 = time.perf_counter()
    hp, scale = adiabatic_hamiltonian(q)
    hp = hp.filter((hp.xs != 0) | (hp.zs != 0))
    driver = PauliSum(n, np.array([1 << i for i in range(n)], dtype=np.uint64),
                      np.zeros(n, dtype=np.uint64), -np.ones(n))
    amp = np.full(1 << n, (1 << n) ** -0.5, dtype=np.complex128)
    if backend is None or getattr(backend, "name", "dense") == "dense":
        state = DenseState(n, amp)
    elif backend.name == "sparse":
        state = SparseState.from_dense(amp)
    else:
        raise ValueError(f"adiabatic evolution needs a state-vector backend, not {backend.name!r}")

    def h_at(t):
        s = schedule(t / total_time) if total_time > 0 else 1.0
        return driver.scale(1.0 - s) + hp.scale(s)

    if total_time > 0:
        state = trotter_evolve(state, h_at, total_time, steps)
    probs = np.abs(state.to_dense()) ** 2
    probs /= probs.sum()
    costs = q.all_costs()
    opt = costs <= costs.min() + COST_TOL
    rng = make_rng(seed, "adiabatic")
    counts = rng.multinomial(shots, probs)
    top = np.flatnonzero(counts == counts.max())
    mask = int(top[np.argmin(costs[top])])
    x = _bits(mask, n)
    info = {"success_probability": float(probs[opt].sum()), "scale": scale,
            "total_time": total_time, "steps": steps, "shots": shots,
            "counts_top": int(counts[mask])}
    return PlacementSolution(x, q.cost(x), "adiabatic", time.perf_counter() - t0, info)


# ---------------------------------------------------------------------------
# scoring and planted instances
# ---------------------------------------------------------------------------

def score_recovery(sol, sites, crystal_positions, match_radius=DEFAULT_MATCH_RADIUS):
    """Percentage of crystal waters matched one-to-one by selected sites.

    Greedy matching over all pairs within ``match_radius``, closest first
    (index order on ties).  Returns 0 when there are no crystal waters.
    """
    if match_radius <= 0:
        raise ValueError("match radius must be positive")
    crystal = np.asarray(crystal_positions, dtype=float).reshape(-1, 3)
    if len(crystal) == 0:
        return 0.0
    x = sol.x if hasattr(sol, "x") else np.asarray(sol)
    chosen = sites.positions[np.flatnonzero(x)]
    if len(chosen) == 0:
        return 0.0
    d = np.linalg.norm(chosen[:, None, :] - crystal[None, :, :], axis=-1)
    pairs = np.argwhere(d <= match_radius)
    order = np.lexsort((pairs[:, 1], pairs[:, 0], d[tuple(pairs.T)]))
    used_s, used_c = set(), set()
    for i, j in pairs[order]:
        if i not in used_s and j not in used_c:
            used_s.add(int(i))
            used_c.add(int(j))
    return 100.0 * len(used_c) / len(crystal)


@dataclass
class PlantedPocket:
    grid: DensityGrid
    waters: np.ndarray
    decoys: np.ndarray


def planted_pocket(n_waters=10, seed=0, n_decoys=5, box=12.0, spacing=0.3, sigma=DEFAULT_SIGMA,
                   min_sep=2.6, noise=0.02):
    """Synthetic pocket density built from planted waters.

    Waters (mass 0.8-1.2) and weak decoy blobs (mass 0.15-0.4) are placed
    at least ``min_sep`` apart inside a cubic box; additive noise is
    ``noise`` times the peak density, clipped at zero.  Raises
    ``ValueError`` when the blobs cannot be packed into the box.
    """
    rng = make_rng(seed, "pocket")
    grid = make_grid(np.zeros(3), np.full(3, box), spacing)
    pts = []
    margin = 2.0
    attempts = 0
    while len(pts) < n_waters + n_decoys:
        attempts += 1
        if attempts > 100_000:
            raise ValueError(f"cannot place {n_waters + n_decoys} blobs {min_sep} apart in a box of {box}")
        p = rng.uniform(margin, box - margin, 3)
        if all(np.linalg.norm(p - q) >= min_sep for q in pts):
            pts.append(p)
    pts = np.array(pts)
    masses = np.concatenate([rng.uniform(0.8, 1.2, n_waters), rng.uniform(0.15, 0.4, n_decoys)])
    dens = gaussian_density(grid, pts, sigma, masses)
    vals = dens.values
    vals = np.clip(vals + noise * vals.max() * rng.standard_normal(vals.shape), 0.0, None)
    g = DensityGrid(grid.origin, grid.axes, vals)
    return PlantedPocket(g, pts[:n_waters], pts[n_waters:])


def pocket_qubo(pocket, max_sites=20, threshold_fraction=0.05, min_sep=1.5, sigma=DEFAULT_SIGMA,
                exclusion_radius=2.2):
    """Candidate sites and QUBO for a planted pocket."""
    thr = threshold_fraction * float(pocket.grid.values.max())
    sites = propose_sites(pocket.grid, thr, min_sep, sigma, exclusion_radius, max_sites)
    return sites, build_qubo(pocket.grid, sites)


def dump_json(obj, path=None):
    text = json.dumps(obj, sort_keys=True, indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
