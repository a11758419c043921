import numpy as np
import pytest

from qemkit import mps
from qemkit.oracles import circuit_state, matrix_of
from qemkit.pauli import PauliSum
from qemkit.models import tfim_hamiltonian
from qemkit.statevector import Circuit, SparseState, apply_circuit, expectation, gate, random_circuit

from conftest import random_hermitian_sum, random_state


def test_basis_state_bonds_are_one():
    st = mps.MpsState.basis(6, 0b101101)
    assert all(t.shape[0] == 1 and t.shape[2] == 1 for t in st.tensors)
    assert np.argmax(np.abs(st.to_dense())) == 0b101101


@pytest.mark.parametrize("seed", range(3))
def test_exact_mps_matches_oracle(seed):
    c = random_circuit(7, 90, seed)
    st = mps.apply_circuit(mps.MpsState.basis(7, cutoff=0.0), c)
    assert abs(np.vdot(circuit_state(c), st.to_dense())) ** 2 > 1 - 1e-11
    assert st.accumulated_truncation_error < 1e-20


def test_long_range_cnot():
    c = Circuit(5)
    c.append(gate("h", 4))
    c.append(gate("cx", 4, 0))
    st = mps.apply_circuit(mps.MpsState.basis(5, cutoff=0.0), c)
    np.testing.assert_allclose(st.to_dense(), circuit_state(c), atol=1e-14)


def test_bond_cap_records_truncation():
    c = random_circuit(8, 200, 3)
    capped = mps.apply_circuit(mps.MpsState.basis(8, max_bond=2, cutoff=0.0), c)
    assert max(t.shape[2] for t in capped.tensors) <= 2
    assert capped.accumulated_truncation_error > 1e-6
    assert abs(capped.norm() - 1) < 1e-10


def test_from_dense_roundtrip(rng):
    v = random_state(rng, 6)
    st = mps.mps_from_dense(v, cutoff=0.0)
    np.testing.assert_allclose(st.to_dense(), v, atol=1e-13)
    assert max(t.shape[2] for t in st.tensors) == 8


def test_mpo_matches_matrix(rng):
    h = random_hermitian_sum(rng, 5, 30)
    mpo = mps.mpo_from_pauli_sum(h)
    np.testing.assert_allclose(mpo.to_dense(), matrix_of(h).matrix, atol=1e-12)
    small = mps.compress_mpo(mpo)
    np.testing.assert_allclose(small.to_dense(), matrix_of(h).matrix, atol=1e-9)


def test_tfim_mpo_bond_dimension_is_small():
    mpo = mps.compress_mpo(mps.mpo_from_pauli_sum(tfim_hamiltonian(12)))
    assert max(w.shape[-1] for w in mpo.tensors) <= 3


def test_expectation_and_terms_match_statevector(rng):
    h = random_hermitian_sum(rng, 6, 25)
    v = random_state(rng, 6)
    st = mps.mps_from_dense(v, cutoff=0.0)
    ref = SparseState.from_dense(v)
    assert abs(mps.mps_expectation(st, h) - expectation(ref, h)) < 1e-11
    np.testing.assert_allclose(mps.term_expectations(st, h),
                               [np.vdot(v, matrix_of(PauliSum.from_string(p)).matrix @ v) for _, p in h],
                               atol=1e-11)


def test_generator_matches_statevector(rng):
    from qemkit.statevector import apply_generator

    g = PauliSum.from_terms(6, [(0.5j, "XYIIIZ"), (0.5j, "YXIIIZ")])
    v = random_state(rng, 6)
    out = mps.apply_generator(mps.mps_from_dense(v, cutoff=0.0), g, 0.37).to_dense()
    np.testing.assert_allclose(out, apply_generator(SparseState.from_dense(v), g, 0.37).to_dense(), atol=1e-12)


def test_sampling_matches_probabilities():
    c = Circuit(3)
    c.append(gate("h", 0))
    c.append(gate("cx", 0, 2))
    st = mps.apply_circuit(mps.MpsState.basis(3, cutoff=0.0), c)
    hist = mps.sample(st, 2000, seed=1)
    assert set(hist) == {0, 5}
    assert hist == mps.sample(st, 2000, seed=1)


def test_backend_refuses_h_psi():
    be = mps.MpsBackend()
    with pytest.raises(NotImplementedError):
        be.apply_pauli_sum(be.basis_state(2), PauliSum.from_label("XX"))


def test_backend_gradients_match_sparse(rng):
    from qemkit.statevector import SparseBackend

    h = random_hermitian_sum(rng, 5, 20)
    gens = [PauliSum.from_label("XYIII", 1j), PauliSum.from_label("IIZYX", 1j)]
    v = random_state(rng, 5)
    be = mps.MpsBackend(cutoff=0.0)
    np.testing.assert_allclose(be.gradients(be.from_dense(v), h, gens),
                               SparseBackend().gradients(SparseState.from_dense(v), h, gens), atol=1e-11)


def test_mps_agrees_with_sparse_on_circuit():
    c = random_circuit(10, 120, 7)
    a = mps.apply_circuit(mps.MpsState.basis(10, cutoff=0.0), c).to_dense()
    b = apply_circuit(SparseState.basis(10), c).to_dense()
    assert abs(np.vdot(a, b)) ** 2 > 1 - 1e-10
