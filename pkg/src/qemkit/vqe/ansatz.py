"""Product-form ansatz circuits over an operator pool."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..chemistry import MolecularIntegrals, ReferenceState, hf_reference
from .pools import OperatorPool, fermionic_pool


@dataclass
class AnsatzCircuit:
    """``prod_k exp(theta_k G_k)`` applied to a reference, first step first.

    Attributes
    ----------
    reference : ReferenceState, int, or backend state
        Basis-state reference (occupation bitmask or index) or an explicit
        state in the representation of the backend that evaluates it.
    pool : OperatorPool
    steps : list of (int, float)
        Pool index and angle (radians) per factor.
    info : dict
        Free-form run metadata (status flags, overlap traces).
    """

    reference: object
    pool: OperatorPool
    steps: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def n_qubits(self):
        return self.pool.n_qubits

    @property
    def n_params(self):
        return len(self.steps)

    @property
    def indices(self):
        return [k for k, _ in self.steps]

    @property
    def thetas(self):
        return np.array([t for _, t in self.steps], dtype=float)

    @property
    def generators(self):
        return [self.pool.generators[k] for k, _ in self.steps]

    @property
    def labels(self):
        return [self.pool.labels[k] for k, _ in self.steps]

    def with_thetas(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        if thetas.shape != (len(self.steps),):
            raise ValueError("parameter count mismatch")
        steps = [(k, float(t)) for (k, _), t in zip(self.steps, thetas)]
        return AnsatzCircuit(self.reference, self.pool, steps, dict(self.info))

    def append(self, index, theta=0.0):
        self.steps.append((int(index), float(theta)))

    def reference_state(self, backend):
        ref = self.reference
        if isinstance(ref, ReferenceState):
            return backend.basis_state(ref.n_qubits, ref.index)
        if isinstance(ref, (int, np.integer)):
            return backend.basis_state(self.n_qubits, int(ref))
        if isinstance(ref, np.ndarray):
            return backend.from_dense(ref)
        return ref.copy()

    def prepare(self, backend, thetas=None):
        """State of the circuit on ``backend`` (angles from ``thetas`` if given)."""
        thetas = self.thetas if thetas is None else np.asarray(thetas, dtype=float)
        state = self.reference_state(backend)
        for g, t in zip(self.generators, thetas):
            if t != 0.0:
                state = backend.apply_generator(state, g, t)
        return state


def tuccsd_ansatz(m, trotter_order=1, reference=None):
    """Fixed trotterized UCCSD circuit: all singles, then all doubles.

    Parameters
    ----------
    m : MolecularIntegrals
    trotter_order : int
        Only first order is provided.
    """
    if trotter_order != 1:
        raise ValueError("only first-order trotterization is supported")
    if not isinstance(m, MolecularIntegrals):
        raise TypeError("tUCCSD needs molecular integrals")
    pool = fermionic_pool(m)
    ref = hf_reference(m) if reference is None else reference
    return AnsatzCircuit(ref, pool, [(k, 0.0) for k in range(len(pool))])
