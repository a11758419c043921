"""Small model Hamiltonians used by examples and tests."""
from __future__ import annotations

import numpy as np

from .pauli import PauliSum


def tfim_hamiltonian(n_qubits, j=1.0, g=1.0, periodic=False):
    """Transverse-field Ising chain ``H = -j sum Z_k Z_{k+1} - g sum X_k``."""
    if n_qubits < 2:
        raise ValueError("need at least two spins")
    xs, zs, cs = [], [], []
    bonds = [(k, k + 1) for k in range(n_qubits - 1)]
    if periodic and n_qubits > 2:
        bonds.append((n_qubits - 1, 0))
    for a, b in bonds:
        xs.append(0)
        zs.append((1 << a) | (1 << b))
        cs.append(-j)
    for k in range(n_qubits):
        xs.append(1 << k)
        zs.append(0)
        cs.append(-g)
    return PauliSum(n_qubits, np.array(xs, dtype=np.uint64), np.array(zs, dtype=np.uint64),
                    np.array(cs, dtype=np.complex128))
