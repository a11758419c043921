import numpy as np
import pytest

from qemkit.chemistry import hf_reference, jordan_wigner, load_bundled
from qemkit.models import tfim_hamiltonian
from qemkit.partitioned import (PartitionedBackend, block_ranges, partition_hamiltonian,
                                partitioned_expectation, partitioned_gradient)
from qemkit.pauli import PauliSum
from qemkit.statevector import SparseBackend, SparseState, apply_circuit, expectation, random_circuit

from conftest import random_hermitian_sum, random_state


def test_block_ranges():
    assert block_ranges(8, 0) == [(0, 8)]
    assert block_ranges(8, 1) == [(0, 4), (4, 8)]
    assert block_ranges(7, 2) == [(0, 2), (2, 4), (4, 6), (6, 7)]
    with pytest.raises(ValueError):
        block_ranges(3, 2)


def test_partition_reconstructs_hamiltonian(rng):
    h = random_hermitian_sum(rng, 8, 60)
    ph = partition_hamiltonian(h, 1)
    assert ph.reconstruct().allclose(h, atol=0.0)
    assert sum(len(t) for t in ph.local_terms) + len(ph.interactive_sum) == len(h)
    for part, (lo, hi) in zip(ph.local_terms, ph.blocks):
        inside = ((1 << hi) - 1) ^ ((1 << lo) - 1)
        assert all(((int(x) | int(z)) & ~inside) == 0 for x, z in zip(part.xs, part.zs))


def test_nearest_neighbour_chain_has_one_interactive_bond():
    ph = partition_hamiltonian(tfim_hamiltonian(8), 1)
    assert len(ph.interactive_sum) == 1
    assert ph.interactive_sum.terms[0][1].support == (3, 4)


@pytest.mark.parametrize("eta", [0, 1, 2])
def test_expectation_matches_statevector(kernel_impl, rng, eta):
    h = random_hermitian_sum(rng, 8, 50)
    st = SparseState.from_dense(random_state(rng, 8))
    ph = partition_hamiltonian(h, eta)
    value, bound = partitioned_expectation(st, ph, return_bound=True)
    assert abs(value - expectation(st, h)) < 1e-11
    assert bound < 1e-10


def test_truncated_mps_error_within_bound(rng):
    h = random_hermitian_sum(rng, 8, 50)
    st = apply_circuit(SparseState.basis(8), random_circuit(8, 150, 4))
    value, bound = partitioned_expectation(st, partition_hamiltonian(h, 1), max_bond=4, return_bound=True)
    assert abs(value - expectation(st, h)) <= bound + 1e-12


def test_gradient_matches_sparse(kernel_impl, rng):
    h = random_hermitian_sum(rng, 6, 30)
    g = PauliSum.from_label("XYIIZY", 1j)
    st = SparseState.from_dense(random_state(rng, 6))
    ref = SparseBackend().gradients(st, h, [g])[0]
    assert abs(partitioned_gradient(st, partition_hamiltonian(h, 1), g) - ref) < 1e-11


def test_backend_energy_on_molecule(kernel_impl):
    m = load_bundled("lih_sto3g")
    h = jordan_wigner(m)
    be = PartitionedBackend(eta=1)
    st = be.basis_state(h.n_qubits, hf_reference(m).index)
    assert abs(be.expectation(st, h) - m.metadata["hf_energy"]) < 1e-9
