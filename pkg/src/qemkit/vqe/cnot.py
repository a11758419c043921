"""CNOT resource counts for product-form ansatze."""
from __future__ import annotations

import numpy as np

from ..pauli import _pc

# CNOTs per qubit excitation keyed by the number of flipped qubits, taken
# from the standard single (2) and double (13) qubit-excitation circuits
QEB_CNOT_COSTS = {2: 2, 4: 13}
DECOMPOSITIONS = ("qubit", "QEB")


def pauli_rotation_cnots(weight):
    """``exp(i theta P)`` with a CNOT ladder: ``2 (w - 1)`` for ``w >= 1``."""
    return 2 * (int(weight) - 1) if weight > 0 else 0


def _generators(ansatz):
    return ansatz.generators if hasattr(ansatz, "generators") else list(ansatz)


def generator_cnots(g, decomposition="qubit", costs=None):
    """CNOT cost of one generator under a decomposition rule.

    ``qubit``: a single string of weight ``w`` costs ``2 (w - 1)``; a
    multi-string excitation is charged as one of its strings without
    Jordan-Wigner tails, i.e. ``2 (w_x - 1)`` with ``w_x`` the number of
    flipped qubits (what the qubit pool would use in its place).
    ``QEB``: fixed cost per excitation keyed by the number of flipped
    qubits (``QEB_CNOT_COSTS`` unless ``costs`` is given).
    """
    if len(g) == 0:
        raise ValueError("empty generator")
    xmask = int(np.bitwise_or.reduce(g.xs))
    wx = xmask.bit_count()
    if decomposition == "qubit":
        if len(g) == 1:
            return pauli_rotation_cnots(int(_pc(g.xs | g.zs)[0]))
        if np.any(g.xs != g.xs[0]):
            raise ValueError("generator strings flip different qubits")
        return pauli_rotation_cnots(wx)
    if decomposition == "QEB":
        table = QEB_CNOT_COSTS if costs is None else costs
        if wx not in table:
            raise ValueError(f"no qubit-excitation circuit for {wx} flipped qubits")
        return int(table[wx])
    raise ValueError(f"unknown decomposition {decomposition!r}")


def count_cnots(ansatz, decomposition="qubit", costs=None):
    """Total CNOTs of an ansatz (or a list of generators), summed over steps."""
    return int(sum(generator_cnots(g, decomposition, costs) for g in _generators(ansatz)))
