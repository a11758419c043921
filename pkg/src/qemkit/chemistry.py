"""Molecular integrals, FCIDUMP I/O and the Jordan-Wigner mapping.

Spin orbitals are interleaved by default: spatial orbital ``p`` with spin
``sigma`` (0 = alpha, 1 = beta) is spin orbital ``2 p + sigma``, and spin
orbital ``P`` is qubit ``P``.  Two-electron integrals are stored in
chemists' notation ``(pq|rs)`` exactly as in the file.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .pauli import PauliSum, _mul_arrays

INTEGRAL_TOL = 1e-12
SYMMETRY_TOL = 1e-10
_IPOW = np.array([1, 1j, -1, -1j], dtype=np.complex128)


@dataclass
class MolecularIntegrals:
    """Spatial-orbital Hamiltonian ``E0 + sum h_pq E_pq + 1/2 sum (pq|rs) ...``.

    Attributes
    ----------
    n_orbitals, n_electrons : int
    core_energy : float
        Constant term (nuclear repulsion plus frozen core), Hartree.
    one_body : ndarray, shape (n, n)
    two_body : ndarray, shape (n, n, n, n)
        Chemists' notation.
    ms2 : int
        Twice the spin projection.
    """

    n_orbitals: int
    n_electrons: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    ms2: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_orbitals
        self.one_body = np.asarray(self.one_body, dtype=float).reshape(n, n)
        self.two_body = np.asarray(self.two_body, dtype=float).reshape(n, n, n, n)
        self.core_energy = float(self.core_energy)

    @property
    def n_qubits(self):
        return 2 * self.n_orbitals

    @property
    def n_alpha(self):
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self):
        return (self.n_electrons - self.ms2) // 2

    def check_symmetry(self, tol=SYMMETRY_TOL):
        """Raise ``ValueError`` unless the real-orbital index symmetries hold."""
        h, g = self.one_body, self.two_body
        if np.max(np.abs(h - h.T), initial=0.0) > tol:
            raise ValueError("one-body integrals are not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if np.max(np.abs(g - g.transpose(perm)), initial=0.0) > tol:
                raise ValueError("two-body integrals violate the 8-fold symmetry")
        return True

    def allclose(self, other, atol=0.0):
        return (
            self.n_orbitals == other.n_orbitals
            and self.n_electrons == other.n_electrons
            and self.ms2 == other.ms2
            and abs(self.core_energy - other.core_energy) <= atol
            and np.allclose(self.one_body, other.one_body, rtol=0, atol=atol)
            and np.allclose(self.two_body, other.two_body, rtol=0, atol=atol)
        )


@dataclass(frozen=True)
class ReferenceState:
    """Occupation bitmask over ``n_qubits`` spin orbitals (bit ``P`` = qubit ``P``)."""

    n_qubits: int
    occupation: int

    @property
    def n_electrons(self):
        return self.occupation.bit_count()

    @property
    def bitstring(self):
        """Conventional string with qubit 0 rightmost."""
        return format(self.occupation, f"0{self.n_qubits}b")

    @property
    def index(self):
        return self.occupation


# ---------------------------------------------------------------------------
# FCIDUMP
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(r"&FCI(.*?)(&END|/)", re.S | re.I)


def _header_values(text):
    vals = {}
    for m in re.finditer(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z0-9_]+\s*=|$)", text, re.S):
        vals[m.group(1).upper()] = m.group(2).strip().rstrip(",")
    return vals


def parse_fcidump(source):
    """Read an FCIDUMP file (path) or FCIDUMP text.

    Records ``value i j k l`` use 1-based orbital indices: all-zero indices
    give the core energy, ``k = l = 0`` a one-body integral and four
    nonzero indices a two-body integral ``(ij|kl)``.  Symmetry-equivalent
    entries are filled and missing records are zero.

    Raises
    ------
    ValueError
        On a malformed header or an index out of range.
    """
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    m = _HEADER_RE.search(text)
    if m is None:
        raise ValueError("malformed FCIDUMP header: missing &FCI ... &END")
    head = _header_values(m.group(1))
    try:
        norb = int(head["NORB"])
        nelec = int(head["NELEC"])
    except (KeyError, ValueError) as exc:
        raise ValueError("malformed FCIDUMP header: NORB and NELEC required") from exc
    ms2 = int(head.get("MS2", "0") or 0)
    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    core = 0.0
    for lineno, line in enumerate(text[m.end():].splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise ValueError(f"malformed FCIDUMP record: {line!r}")
        v = float(parts[0].replace("D", "E").replace("d", "e"))
        if not math.isfinite(v):
            raise ValueError(f"non-finite integral in record {lineno}: {line!r}")
        i, j, k, l_ = (int(p) for p in parts[1:])
        if min(i, j, k, l_) < 0 or max(i, j, k, l_) > norb:
            raise ValueError(f"orbital index out of range in record {lineno}: {line!r}")
        if i == j == k == l_ == 0:
            core = v
        elif k == 0 and l_ == 0:
            if i == 0 or j == 0:
                continue  # orbital energies are not needed
            h[i - 1, j - 1] = h[j - 1, i - 1] = v
        elif min(i, j, k, l_) == 0:
            raise ValueError(f"malformed FCIDUMP record: {line!r}")
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l_ - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)):
                g[a, b, c, d] = g[c, d, a, b] = v
    return MolecularIntegrals(norb, nelec, core, h, g, ms2)


def write_fcidump(m, path=None, tol=0.0):
    """Serialize to FCIDUMP text with 17 significant digits; optionally write it."""
    n = m.n_orbitals
    lines = [f"&FCI NORB={n},NELEC={m.n_electrons},MS2={m.ms2},", "ORBSYM=" + "1," * n, "ISYM=1,", "&END"]
    fmt = "{:.16e} {} {} {} {}"
    g = m.two_body
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l_ in range(k + 1):
                    if k * (k + 1) // 2 + l_ > ij:
                        continue
                    v = g[i, j, k, l_]
                    if abs(v) > tol:
                        lines.append(fmt.format(v, i + 1, j + 1, k + 1, l_ + 1))
    for i in range(n):
        for j in range(i + 1):
            v = m.one_body[i, j]
            if abs(v) > tol:
                lines.append(fmt.format(v, i + 1, j + 1, 0, 0))
    lines.append(fmt.format(m.core_energy, 0, 0, 0, 0))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def data_path(name):
    """Path of a bundled data file, e.g. ``data_path("h2_sto3g.fcidump")``."""
    return Path(str(resources.files("qemkit") / "data" / name))


def load_bundled(name):
    """Integrals and provenance metadata of a bundled molecule."""
    m = parse_fcidump(data_path(f"{name}.fcidump"))
    m.metadata = load_provenance(data_path(f"{name}.fcidump"))
    return m


def load_provenance(fcidump_path):
    """JSON sidecar ``<file>.json`` (molecule, basis, HF and FCI energies)."""
    p = Path(fcidump_path)
    side = p.with_suffix(".json")
    if not side.exists():
        return {}
    return json.loads(side.read_text())


def bundled_molecules():
    root = Path(str(resources.files("qemkit") / "data"))
    return sorted(p.stem for p in root.glob("*.fcidump"))


# ---------------------------------------------------------------------------
# spin orbitals and the Jordan-Wigner mapping
# ---------------------------------------------------------------------------

def spin_orbital(p, sigma, n_orbitals, ordering="interleaved"):
    if ordering == "interleaved":
        return 2 * p + sigma
    if ordering == "blocked":
        return p + sigma * n_orbitals
    raise ValueError(f"unknown ordering {ordering!r}")


def hf_reference(m, ordering="interleaved"):
    """Hartree-Fock determinant filling the lowest spin orbitals of each spin."""
    if m.n_electrons > 2 * m.n_orbitals or m.n_alpha > m.n_orbitals:
        raise ValueError("electron count exceeds available spin orbitals")
    occ = 0
    for sigma, count in ((0, m.n_alpha), (1, m.n_beta)):
        for p in range(count):
            occ |= 1 << spin_orbital(p, sigma, m.n_orbitals, ordering)
    return ReferenceState(m.n_qubits, occ)


def jw_ladder_product(ops, coeffs, n_qubits):
    """Jordan-Wigner image of ``sum_t coeffs[t] * prod_k op_k`` as a PauliSum.

    Parameters
    ----------
    ops : sequence of (index_array, dagger)
        Ladder operators multiplied left to right; ``index_array`` gives the
        spin orbital of that factor for every term.
    coeffs : array_like
        One coefficient per term.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    x = np.zeros(coeffs.size, dtype=np.uint64)
    z = np.zeros(coeffs.size, dtype=np.uint64)
    c = coeffs.copy()
    one = np.uint64(1)
    for idx, dagger in ops:
        # earlier factors replicated the terms blockwise
        idx = np.tile(np.asarray(idx, dtype=np.uint64), x.size // coeffs.size)
        bit = one << idx
        tail = bit - one
        xs, zs, cs = [], [], []
        # a^dagger = (X - iY)/2 Z_tail, a = (X + iY)/2 Z_tail
        for zb, w in ((tail, 0.5), (tail | bit, -0.5j if dagger else 0.5j)):
            nx, nz, e = _mul_arrays(x, z, bit, zb)
            xs.append(nx)
            zs.append(nz)
            cs.append(c * w * _IPOW[e])
        x, z, c = np.concatenate(xs), np.concatenate(zs), np.concatenate(cs)
    return PauliSum(n_qubits, x, z, c)


def excitation_generator(creators, annihilators, n_qubits):
    """Anti-Hermitian ``T - T^dagger`` for ``T = a+_c1 a+_c2 ... a_a2 a_a1``.

    ``creators`` and ``annihilators`` list spin orbitals; the annihilators
    are applied in reverse order so that a double ``(a, b) <- (i, j)`` is
    ``a+_a a+_b a_j a_i``.
    """
    ops = [([p], True) for p in creators] + [([q], False) for q in reversed(annihilators)]
    t = jw_ladder_product(ops, [1.0], n_qubits)
    adj = [([p], not d) for (p,), d in reversed(ops)]
    return t - jw_ladder_product(adj, [1.0], n_qubits)


def jordan_wigner(m, ordering="interleaved", tol=INTEGRAL_TOL):
    """Qubit Hamiltonian of the integrals on ``2 n_orbitals`` qubits.

    The two-body part is written in antisymmetrized physicists' form,
    ``sum_{P<Q, R<S} <PQ||RS> a+_P a+_Q a_S a_R`` with
    ``<PQ|RS> = (pr|qs) delta(sP, sR) delta(sQ, sS)``.  Integrals below
    ``tol`` are dropped.
    """
    n = m.n_orbitals
    nso = 2 * n
    so = np.arange(nso)
    if ordering == "interleaved":
        spatial, spin = so // 2, so % 2
    elif ordering == "blocked":
        spatial, spin = so % n, so // n
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    terms = [PauliSum.identity(nso, m.core_energy)]

    P, Q = np.meshgrid(so, so, indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    hv = np.where(spin[P] == spin[Q], m.one_body[spatial[P], spatial[Q]], 0.0)
    sel = np.abs(hv) > tol
    if sel.any():
        terms.append(jw_ladder_product([(P[sel], True), (Q[sel], False)], hv[sel], nso))

    pq = np.array([(a, b) for a in range(nso) for b in range(a + 1, nso)], dtype=np.int64).reshape(-1, 2)
    if pq.size:
        A = np.repeat(pq, len(pq), axis=0)
        B = np.tile(pq, (len(pq), 1))
        p_, q_, r_, s_ = A[:, 0], A[:, 1], B[:, 0], B[:, 1]
        g = m.two_body
        sp, sq, sr, ss = spin[p_], spin[q_], spin[r_], spin[s_]
        direct = np.where((sp == sr) & (sq == ss), g[spatial[p_], spatial[r_], spatial[q_], spatial[s_]], 0.0)
        exch = np.where((sp == ss) & (sq == sr), g[spatial[p_], spatial[s_], spatial[q_], spatial[r_]], 0.0)
        v = direct - exch
        sel = np.abs(v) > tol
        if sel.any():
            terms.append(jw_ladder_product(
                [(p_[sel], True), (q_[sel], True), (s_[sel], False), (r_[sel], False)], v[sel], nso))
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    if len(out) and np.max(np.abs(out.coeffs.imag)) > 1e-10:
        raise RuntimeError("mapped Hamiltonian is not Hermitian")
    return out.hermitian_part()
