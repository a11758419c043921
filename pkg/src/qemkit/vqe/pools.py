"""Operator pools for adaptive ansatz construction.

Every generator is an anti-Hermitian ``PauliSum`` made of mutually
commuting strings, so ``exp(theta G)`` is applied exactly as a product of
Pauli rotations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..chemistry import MolecularIntegrals, excitation_generator, hf_reference
from ..pauli import PauliSum, _anticommute, _mul_arrays

POOL_KINDS = ("fermionic_SD", "QEB", "qubit", "minimal_complete")
_ALIASES = {
    "fermionic-sd": "fermionic_SD", "fermionic_sd": "fermionic_SD", "fsd": "fermionic_SD",
    "qeb": "QEB", "qubit": "qubit", "mcp": "minimal_complete",
    "minimal-complete": "minimal_complete", "minimal_complete": "minimal_complete",
}
CLOSURE_CHECK_MAX_QUBITS = 5


@dataclass
class OperatorPool:
    """Candidate generators with labels and their parent excitations.

    Attributes
    ----------
    excitations : list
        ``(creators, annihilators)`` spin-orbital tuples for generators
        derived from an excitation, ``None`` otherwise.
    """

    kind: str
    n_qubits: int
    generators: list
    labels: list
    excitations: list = field(default_factory=list)

    def __len__(self):
        return len(self.generators)

    def __getitem__(self, k):
        return self.generators[k]


def normalize_kind(kind):
    if kind in POOL_KINDS:
        return kind
    try:
        return _ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"unsupported pool kind {kind!r}") from None


def _excitations(source):
    """Spin-conserving singles and doubles.

    With integrals: occupied (Hartree-Fock) to virtual spin orbitals.  With
    a bare qubit count: generalized excitations over all index sets.
    """
    if isinstance(source, MolecularIntegrals):
        n = source.n_qubits
        occ_mask = hf_reference(source).occupation
        occ = [p for p in range(n) if occ_mask >> p & 1]
        vir = [p for p in range(n) if not occ_mask >> p & 1]
        singles = [((a,), (i,)) for i in occ for a in vir if a % 2 == i % 2]
        doubles = []
        for i, j in itertools.combinations(occ, 2):
            for a, b in itertools.combinations(vir, 2):
                if sorted((i % 2, j % 2)) == sorted((a % 2, b % 2)):
                    doubles.append(((a, b), (i, j)))
        return n, singles, doubles
    n = int(source)
    singles = [((q,), (p,)) for p, q in itertools.combinations(range(n), 2)]
    doubles = []
    pairs = list(itertools.combinations(range(n), 2))
    for (p, q), (r, s) in itertools.combinations(pairs, 2):
        if len({p, q, r, s}) == 4:
            doubles.append(((r, s), (p, q)))
    return n, singles, doubles


def _exc_label(cre, ann):
    return "^".join(map(str, cre)) + "<-" + ",".join(map(str, ann))


def fermionic_pool(source):
    n, singles, doubles = _excitations(source)
    gens, labels, excs = [], [], []
    for cre, ann in singles + doubles:
        gens.append(excitation_generator(cre, ann, n))
        labels.append(_exc_label(cre, ann))
        excs.append((cre, ann))
    return OperatorPool("fermionic_SD", n, gens, labels, excs)


def qeb_pool(source):
    fp = fermionic_pool(source)
    gens = [g.strip_z(0) for g in fp.generators]
    return OperatorPool("QEB", fp.n_qubits, gens, ["q" + lab for lab in fp.labels], fp.excitations)


def qubit_pool(source):
    """Distinct Pauli strings of the qubit-excitation generators, as ``i P``."""
    qp = qeb_pool(source)
    seen = {}
    for g, exc in zip(qp.generators, qp.excitations):
        for x, z in zip(g.xs.tolist(), g.zs.tolist()):
            seen.setdefault((x, z), exc)
    gens, labels, excs = [], [], []
    for (x, z), exc in sorted(seen.items()):
        p = PauliSum(qp.n_qubits, [x], [z], [1j], canonical=True)
        gens.append(p)
        labels.append("i" + next(iter(p))[1].label)
        excs.append(exc)
    return OperatorPool("qubit", qp.n_qubits, gens, labels, excs)


def _string(n, letters):
    """``PauliSum`` ``i * P`` for ``letters = {qubit: 'X'|'Y'|'Z'}``."""
    lab = ["I"] * n
    for q, ch in letters.items():
        lab[q] = ch
    return PauliSum.from_label("".join(lab), 1j)


def minimal_complete_pool(n_qubits, verify=None):
    """Nearest-neighbour generating set with full real Lie closure.

    The set is ``{i Y_0, i Y_1} + {i Y_k Z_{k+1}, i Z_k Y_{k+1}}`` for
    ``k = 0..n-2`` (``2n`` generators), plus ``i Y_2`` when ``n = 3``.  Its
    closure is the algebra of all Pauli strings with an odd number of ``Y``
    (real orthogonal rotations of real wavefunctions), which is checked
    symbolically for ``n <= 5`` unless disabled.
    """
    n = int(n_qubits)
    if n < 2:
        raise ValueError("minimal complete pool needs at least two qubits")
    sets = [{0: "Y"}, {1: "Y"}]
    for k in range(n - 1):
        sets += [{k: "Y", k + 1: "Z"}, {k: "Z", k + 1: "Y"}]
    if n == 3:
        sets.append({2: "Y"})
    gens = [_string(n, letters) for letters in sets]
    labels = ["i" + next(iter(g))[1].label for g in gens]
    if verify is None:
        verify = n <= CLOSURE_CHECK_MAX_QUBITS
    if verify:
        dim = closure_size(gens)
        if dim != odd_y_dimension(n):
            raise RuntimeError(f"pool closure has dimension {dim}, expected {odd_y_dimension(n)}")
    return OperatorPool("minimal_complete", n, gens, labels, [None] * len(gens))


def odd_y_dimension(n):
    """Number of Pauli strings with an odd count of ``Y`` (= dim so(2**n))."""
    return (1 << (n - 1)) * ((1 << n) - 1)


def closure_size(generators):
    """Size of the Lie closure of single-string generators, by string BFS.

    The commutator of two anticommuting strings is (a multiple of) their
    product, so the closure is spanned by strings and can be enumerated.
    """
    xs, zs = [], []
    for g in generators:
        if len(g) != 1:
            raise ValueError("symbolic closure needs single-string generators")
        xs.append(int(g.xs[0]))
        zs.append(int(g.zs[0]))
    known = set(zip(xs, zs))
    frontier = list(known)
    while frontier:
        fx = np.array([p[0] for p in frontier], dtype=np.uint64)
        fz = np.array([p[1] for p in frontier], dtype=np.uint64)
        allk = list(known)
        kx = np.array([p[0] for p in allk], dtype=np.uint64)
        kz = np.array([p[1] for p in allk], dtype=np.uint64)
        ax, bx = np.meshgrid(fx, kx, indexing="ij")
        az, bz = np.meshgrid(fz, kz, indexing="ij")
        anti = _anticommute(ax, az, bx, bz)
        px, pz, _ = _mul_arrays(ax[anti], az[anti], bx[anti], bz[anti])
        new = set(zip(px.tolist(), pz.tolist())) - known
        known |= new
        frontier = list(new)
    return len(known)


def build_pool(kind, source):
    """Build an operator pool.

    Parameters
    ----------
    kind : str
        ``fermionic_SD``, ``QEB``, ``qubit`` or ``minimal_complete`` (CLI
        aliases such as ``fermionic-sd``, ``qeb`` and ``mcp`` are accepted).
    source : MolecularIntegrals or int
        Molecule (excitations from the Hartree-Fock reference) or a qubit
        count (generalized excitations).
    """
    kind = normalize_kind(kind)
    if kind == "fermionic_SD":
        return fermionic_pool(source)
    if kind == "QEB":
        return qeb_pool(source)
    if kind == "qubit":
        return qubit_pool(source)
    n = source.n_qubits if isinstance(source, MolecularIntegrals) else int(source)
    return minimal_complete_pool(n)


def square_scale(g):
    """``s**2`` if ``G**2 = -s**2 I``, else ``None``."""
    sq = g @ g
    if len(sq) == 1 and sq.xs[0] == 0 and sq.zs[0] == 0 and abs(sq.coeffs[0].imag) < 1e-12 and sq.coeffs[0].real < 0:
        return -sq.coeffs[0].real
    return None


def cube_scale(g, tol=1e-12):
    """``s**2`` if ``G**3 = -s**2 G`` (two-harmonic energy landscape), else ``None``."""
    g3 = g @ (g @ g)
    if len(g3) == 0:
        return None
    if len(g3) != len(g) or not (np.array_equal(g3.xs, g.xs) and np.array_equal(g3.zs, g.zs)):
        return None
    ratio = g3.coeffs / g.coeffs
    r = ratio[0]
    if np.max(np.abs(ratio - r)) > tol or abs(r.imag) > tol or r.real >= 0:
        return None
    return -r.real
