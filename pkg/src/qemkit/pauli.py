"""Pauli-string algebra, Hamiltonian containers and the QUBO to Ising map.

Conventions
-----------
* A Pauli string on ``n`` qubits is stored as two integer bitmasks: bit ``q``
  of ``x`` is set for X or Y on qubit ``q`` and bit ``q`` of ``z`` for Z or Y.
* Qubit 0 is the least-significant bit of every basis-state index.
* The canonical (phase-free) string for masks ``(x, z)`` is the tensor
  product of Pauli matrices, which equals ``i**popcount(x & z) X^x Z^z``.
  ``PauliString`` carries an extra phase ``i**k``; ``PauliSum`` absorbs all
  phases into its coefficients.
* Text labels list qubit 0 first: ``"XIZ"`` is X on qubit 0 and Z on qubit 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CANCEL_TOL = 1e-12
MAX_QUBITS = 63

_SYMBOLS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _SYMBOLS.items()}
_IPOW = np.array([1, 1j, -1, -1j], dtype=np.complex128)


def _popcount(v):
    return int(v).bit_count()


def _check_width(n):
    if not 0 <= n <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [0, {MAX_QUBITS}], got {n}")


@dataclass(frozen=True, slots=True)
class PauliString:
    """A single Pauli string ``i**phase * P``.

    Parameters
    ----------
    n_qubits : int
        Register width.
    x, z : int
        Bitmasks; see the module docstring.
    phase : int
        Exponent ``k`` of the global factor ``i**k`` (taken mod 4).
    """

    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        _check_width(self.n_qubits)
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("mask wider than n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label, phase=0):
        """Build from a label such as ``"XIZY"`` (qubit 0 leftmost)."""
        x = z = 0
        for q, ch in enumerate(label.upper()):
            if ch not in _BITS:
                raise ValueError(f"bad Pauli symbol {ch!r}")
            bx, bz = _BITS[ch]
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z, phase)

    @classmethod
    def identity(cls, n_qubits):
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits, qubit, symbol):
        """One non-identity factor ``symbol`` on ``qubit``."""
        bx, bz = _BITS[symbol.upper()]
        return cls(n_qubits, bx << qubit, bz << qubit)

    @property
    def label(self):
        return "".join(_SYMBOLS[((self.x >> q) & 1, (self.z >> q) & 1)] for q in range(self.n_qubits))

    @property
    def phase_value(self):
        return complex(_IPOW[self.phase])

    @property
    def weight(self):
        return _popcount(self.x | self.z)

    @property
    def support(self):
        m = self.x | self.z
        return tuple(q for q in range(self.n_qubits) if (m >> q) & 1)

    def commutes(self, other):
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def __mul__(self, other):
        return pauli_mul(self, other)

    def __str__(self):
        return ["+", "+i", "-", "-i"][self.phase] + self.label


def pauli_mul(a, b):
    """Product ``a @ b`` of two Pauli strings with the accumulated phase.

    Raises
    ------
    ValueError
        If the widths differ.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("width mismatch")
    x = a.x ^ b.x
    z = a.z ^ b.z
    e = (
        a.phase + b.phase
        + _popcount(a.x & a.z) + _popcount(b.x & b.z)
        + 2 * _popcount(a.z & b.x) - _popcount(x & z)
    )
    return PauliString(a.n_qubits, x, z, e % 4)


# ---------------------------------------------------------------------------
# vectorized helpers on mask arrays
# ---------------------------------------------------------------------------

def _pc(v):
    return np.bitwise_count(v).astype(np.int64)


def _mul_arrays(xa, za, xb, zb):
    """Masks and ``i``-exponents of canonical-string products a_k * b_k."""
    x = xa ^ xb
    z = za ^ zb
    e = (_pc(xa & za) + _pc(xb & zb) + 2 * _pc(za & xb) - _pc(x & z)) % 4
    return x, z, e


def _anticommute(xa, za, xb, zb):
    return ((_pc(xa & zb) + _pc(za & xb)) & 1).astype(bool)


def _canon(xs, zs, cs, tol=CANCEL_TOL):
    """Sort by (x, z), merge duplicates, drop |c| < tol."""
    xs = np.asarray(xs, dtype=np.uint64)
    zs = np.asarray(zs, dtype=np.uint64)
    cs = np.asarray(cs, dtype=np.complex128)
    if xs.size == 0:
        return xs, zs, cs
    order = np.lexsort((zs, xs))
    xs, zs, cs = xs[order], zs[order], cs[order]
    new = np.ones(xs.size, dtype=bool)
    new[1:] = (xs[1:] != xs[:-1]) | (zs[1:] != zs[:-1])
    starts = np.flatnonzero(new)
    cs = np.add.reduceat(cs, starts)
    xs, zs = xs[starts], zs[starts]
    keep = np.abs(cs) >= tol
    return xs[keep], zs[keep], cs[keep]


class PauliSum:
    """Immutable weighted sum of canonical Pauli strings.

    Terms are kept sorted by ``(x, z)`` with duplicates merged and
    near-zero coefficients (``|c| < 1e-12``) dropped.

    Parameters
    ----------
    n_qubits : int
        Register width.
    xs, zs : array_like of uint64
        Masks of the canonical strings.
    coeffs : array_like of complex
        Coefficients.
    canonical : bool
        Skip canonicalization when the arrays are already canonical.
    """

    __slots__ = ("n_qubits", "xs", "zs", "coeffs", "_cache")

    def __init__(self, n_qubits, xs=(), zs=(), coeffs=(), canonical=False):
        _check_width(n_qubits)
        if canonical:
            xs = np.asarray(xs, dtype=np.uint64)
            zs = np.asarray(zs, dtype=np.uint64)
            coeffs = np.asarray(coeffs, dtype=np.complex128)
        else:
            xs, zs, coeffs = _canon(xs, zs, coeffs)
        for arr in (xs, zs, coeffs):
            arr.flags.writeable = False
        self.n_qubits = n_qubits
        self.xs = xs
        self.zs = zs
        self.coeffs = coeffs
        self._cache = {}

    # -- construction -----------------------------------------------------
    @classmethod
    def from_terms(cls, n_qubits, terms):
        """Build from ``[(coeff, PauliString or label), ...]``."""
        xs, zs, cs = [], [], []
        for c, p in terms:
            if isinstance(p, str):
                p = PauliString.from_label(p)
            if p.n_qubits != n_qubits:
                raise ValueError("width mismatch")
            xs.append(p.x)
            zs.append(p.z)
            # the string phase is absorbed into the coefficient
            cs.append(complex(c) * complex(_IPOW[p.phase]))
        return cls(n_qubits, np.array(xs, dtype=np.uint64), np.array(zs, dtype=np.uint64),
                   np.array(cs, dtype=np.complex128))

    @classmethod
    def from_string(cls, p, coeff=1.0):
        return cls.from_terms(p.n_qubits, [(coeff, p)])

    @classmethod
    def from_label(cls, label, coeff=1.0):
        return cls.from_terms(len(label), [(coeff, label)])

    @classmethod
    def identity(cls, n_qubits, coeff=1.0):
        return cls(n_qubits, [0], [0], [coeff])

    @classmethod
    def zero(cls, n_qubits):
        return cls(n_qubits)

    # -- inspection -------------------------------------------------------
    def __len__(self):
        return int(self.xs.size)

    def __iter__(self):
        for x, z, c in zip(self.xs.tolist(), self.zs.tolist(), self.coeffs.tolist()):
            yield c, PauliString(self.n_qubits, int(x), int(z))

    @property
    def terms(self):
        return list(self)

    def weights(self):
        return _pc(self.xs | self.zs)

    def is_hermitian(self, tol=CANCEL_TOL):
        return bool(np.all(np.abs(self.coeffs.imag) < tol))

    def is_anti_hermitian(self, tol=CANCEL_TOL):
        return bool(np.all(np.abs(self.coeffs.real) < tol))

    def constant(self):
        """Coefficient of the identity string."""
        hit = (self.xs == 0) & (self.zs == 0)
        return complex(self.coeffs[hit].sum()) if hit.any() else 0.0

    def raw_coeffs(self):
        """Coefficients for the raw operators ``X^x Z^z`` used by kernels."""
        return self.coeffs * _IPOW[_pc(self.xs & self.zs) % 4]

    def support_mask(self):
        if len(self) == 0:
            return 0
        return int(np.bitwise_or.reduce(self.xs | self.zs))

    def commuting_strings(self):
        """True when all strings pairwise commute."""
        key = "commuting"
        if key not in self._cache:
            xa, za = self.xs[:, None], self.zs[:, None]
            xb, zb = self.xs[None, :], self.zs[None, :]
            self._cache[key] = not bool(_anticommute(xa, za, xb, zb).any())
        return self._cache[key]

    # -- algebra ----------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, PauliSum):
            raise TypeError("expected PauliSum")
        if other.n_qubits != self.n_qubits:
            raise ValueError("width mismatch")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        self._check(other)
        return PauliSum(
            self.n_qubits,
            np.concatenate((self.xs, other.xs)),
            np.concatenate((self.zs, other.zs)),
            np.concatenate((self.coeffs, other.coeffs)),
        )

    __radd__ = __add__

    def __neg__(self):
        return PauliSum(self.n_qubits, self.xs, self.zs, -self.coeffs, canonical=True)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return PauliSum(self.n_qubits, self.xs, self.zs, self.coeffs * c)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return self.product(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __matmul__(self, other):
        return self.product(other)

    def product(self, other, anticommuting_only=False):
        """Operator product ``self @ other``."""
        self._check(other)
        na, nb = len(self), len(other)
        if na == 0 or nb == 0:
            return PauliSum(self.n_qubits)
        xs, zs, cs = [], [], []
        step = max(1, (1 << 22) // nb)
        for s in range(0, na, step):
            xa = self.xs[s:s + step, None]
            za = self.zs[s:s + step, None]
            ca = self.coeffs[s:s + step, None]
            xb, zb, cb = other.xs[None, :], other.zs[None, :], other.coeffs[None, :]
            x, z, e = _mul_arrays(xa, za, xb, zb)
            c = ca * cb * _IPOW[e]
            if anticommuting_only:
                keep = _anticommute(xa, za, xb, zb)
                x, z, c = x[keep], z[keep], c[keep]
            xs.append(x.ravel())
            zs.append(z.ravel())
            cs.append(c.ravel())
        return PauliSum(self.n_qubits, np.concatenate(xs), np.concatenate(zs), np.concatenate(cs))

    def adjoint(self):
        return PauliSum(self.n_qubits, self.xs, self.zs, np.conj(self.coeffs), canonical=True)

    def hermitian_part(self):
        return PauliSum(self.n_qubits, self.xs, self.zs, self.coeffs.real.astype(np.complex128))

    def filter(self, mask):
        """Sub-sum of the terms selected by a boolean ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        return PauliSum(self.n_qubits, self.xs[mask], self.zs[mask], self.coeffs[mask], canonical=True)

    def strip_z(self, keep_mask):
        """Remove Z factors on qubits outside ``keep_mask``."""
        keep = np.uint64(keep_mask)
        zs = self.zs & (self.xs | keep)
        # removing a Z next to nothing keeps the canonical form; Y factors
        # (x and z set) are untouched because x is set there
        return PauliSum(self.n_qubits, self.xs, zs, self.coeffs)

    def allclose(self, other, atol=1e-10):
        self._check(other)
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    def __eq__(self, other):
        if not isinstance(other, PauliSum) or other.n_qubits != self.n_qubits:
            return NotImplemented
        return (
            np.array_equal(self.xs, other.xs)
            and np.array_equal(self.zs, other.zs)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def norm_bound(self):
        """Sum of absolute coefficients, an upper bound on the operator norm."""
        return float(np.abs(self.coeffs).sum())

    # -- serialization ----------------------------------------------------
    def to_text(self):
        lines = []
        for c, p in self:
            lines.append(f"{_fmt_coeff(c)} {p.label}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text, n_qubits=None):
        terms = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            coeff, label = line.rsplit(None, 1)
            terms.append((complex(coeff), label))
        if n_qubits is None:
            if not terms:
                raise ValueError("empty PauliSum text needs n_qubits")
            n_qubits = len(terms[0][1])
        return cls.from_terms(n_qubits, terms)

    def __repr__(self):
        head = ", ".join(f"{_fmt_coeff(c)}*{p.label}" for c, p in list(self)[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} terms)"
        return f"PauliSum(n_qubits={self.n_qubits}: {head}{more})"


def _fmt_coeff(c):
    c = complex(c)
    if c.imag == 0.0:
        return f"{c.real:.17g}"
    return f"({c.real:.17g}{c.imag:+.17g}j)"


def canonicalize(s):
    """Canonical copy of ``s``: sorted by (x, z), merged, zeros dropped."""
    return PauliSum(s.n_qubits, s.xs, s.zs, s.coeffs)


def commutator(a, b):
    """``[a, b] = ab - ba`` with cancelled terms removed."""
    return a.product(b, anticommuting_only=True).scale(2.0)


def number_operator(n_qubits):
    """Total number operator ``sum_q (I - Z_q) / 2``."""
    zs = np.array([1 << q for q in range(n_qubits)], dtype=np.uint64)
    return PauliSum(
        n_qubits,
        np.zeros(n_qubits + 1, dtype=np.uint64),
        np.concatenate(([0], zs)).astype(np.uint64),
        np.concatenate(([n_qubits / 2], -0.5 * np.ones(n_qubits))),
    )


# ---------------------------------------------------------------------------
# Ising models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsingModel:
    """Diagonal spin Hamiltonian ``c + sum_i h_i z_i + sum_{i<j} J_ij z_i z_j``.

    Spins take values ``z = +1`` for bit 0 and ``z = -1`` for bit 1, so the
    Pauli form uses Z on qubit ``i`` for spin ``i``.
    """

    n_spins: int
    constant: float
    linear: np.ndarray
    quadratic: np.ndarray

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float)
        quad = np.triu(np.asarray(self.quadratic, dtype=float), 1)
        if lin.shape != (self.n_spins,) or quad.shape != (self.n_spins, self.n_spins):
            raise ValueError("shape mismatch")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)

    def energy(self, z):
        """Energy for spins ``z`` in {+1, -1}; accepts a batch of rows."""
        z = np.asarray(z, dtype=float)
        return self.constant + z @ self.linear + np.einsum("...i,ij,...j->...", z, self.quadratic, z)

    def to_pauli_sum(self):
        n = self.n_spins
        xs, zs, cs = [0], [0], [self.constant]
        for i in range(n):
            if self.linear[i] != 0.0:
                xs.append(0)
                zs.append(1 << i)
                cs.append(self.linear[i])
        for i, j in zip(*np.nonzero(self.quadratic)):
            xs.append(0)
            zs.append((1 << int(i)) | (1 << int(j)))
            cs.append(self.quadratic[i, j])
        return PauliSum(n, np.array(xs, dtype=np.uint64), np.array(zs, dtype=np.uint64), cs)

    @classmethod
    def from_pauli_sum(cls, h):
        """Inverse of :meth:`to_pauli_sum` for Z/ZZ-only sums."""
        n = h.n_qubits
        const = 0.0
        lin = np.zeros(n)
        quad = np.zeros((n, n))
        for c, p in h:
            if p.x or abs(c.imag) > CANCEL_TOL:
                raise ValueError("not an Ising operator")
            qs = p.support
            if len(qs) == 0:
                const += c.real
            elif len(qs) == 1:
                lin[qs[0]] += c.real
            elif len(qs) == 2:
                quad[qs[0], qs[1]] += c.real
            else:
                raise ValueError("not an Ising operator")
        return cls(n, const, lin, quad)


def qubo_to_ising(q):
    """Map ``C(x) = sum_i Q_ii x_i + 2 sum_{i<j} Q_ij x_i x_j`` to spins.

    Uses ``x_i = (1 - z_i) / 2``.  ``q`` may be a ``QuboProblem`` or an
    ``(N, N)`` array.

    Raises
    ------
    ValueError
        If ``Q`` is not symmetric or empty.
    """
    Q = np.asarray(getattr(q, "Q", q), dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
        raise ValueError("Q must be a non-empty square matrix")
    if not np.allclose(Q, Q.T, atol=1e-12, rtol=0.0):
        raise ValueError("Q must be symmetric")
    n = Q.shape[0]
    diag = np.diag(Q)
    off = Q - np.diag(diag)
    constant = 0.5 * diag.sum() + 0.25 * off.sum()
    linear = -0.5 * diag - 0.5 * off.sum(axis=1)
    quadratic = 0.5 * np.triu(off, 1)
    return IsingModel(n, float(constant), linear, quadratic)
