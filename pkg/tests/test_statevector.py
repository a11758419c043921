import math

import numpy as np
import pytest

from qemkit.oracles import circuit_state, evolve_exact, matrix_of
from qemkit.pauli import PauliString, PauliSum
from qemkit.statevector import (Circuit, DenseBackend, DenseState, SparseBackend, SparseState, apply_circuit,
                                apply_gate, apply_generator, apply_pauli_sum, dump_state, expectation, fidelity,
                                gate, inner, load_state_dump, pauli_rotation, random_circuit, sample,
                                sampled_expectation, term_expectations, trotter_evolve)

from conftest import random_hermitian_sum, random_state


def _both(n, vec):
    return DenseState(n, vec.copy()), SparseState.from_dense(vec)


def test_bell_state(kernel_impl):
    c = Circuit(2)
    c.append(gate("h", 0))
    c.append(gate("cx", 0, 1))
    for st in (DenseState.basis(2), SparseState.basis(2)):
        out = apply_circuit(st, c).to_dense()
        np.testing.assert_allclose(out, [2 ** -0.5, 0, 0, 2 ** -0.5], atol=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_random_circuits_match_oracle(kernel_impl, seed):
    c = random_circuit(6, 80, seed)
    ref = circuit_state(c)
    for st in (DenseState.basis(6), SparseState.basis(6)):
        out = apply_circuit(st, c).to_dense()
        assert abs(np.vdot(ref, out)) ** 2 > 1 - 1e-12


def test_inverse_circuit_restores_basis(kernel_impl):
    c = random_circuit(5, 60, 11)
    st = apply_circuit(apply_circuit(SparseState.basis(5, 7), c), c.inverse())
    assert st.nnz == 1 and st.indices[0] == 7
    assert abs(abs(st.values[0]) - 1) < 1e-12


def test_sparse_stays_sparse_for_permutations(kernel_impl):
    st = SparseState.basis(40, 0)
    for q in range(40):
        st = apply_gate(st, gate("x", q))
    assert st.nnz == 1 and st.indices[0] == (1 << 40) - 1


def test_pauli_rotation_definition(kernel_impl, rng):
    p = PauliString.from_label("XYZ")
    psi = random_state(rng, 3)
    m = matrix_of(PauliSum.from_string(p)).matrix
    expect = (math.cos(0.3) * np.eye(8) - 1j * math.sin(0.3) * m) @ psi
    for st in _both(3, psi):
        np.testing.assert_allclose(apply_gate(st, pauli_rotation(p, 0.6)).to_dense(), expect, atol=1e-14)


def test_expectation_and_terms(kernel_impl, rng):
    h = random_hermitian_sum(rng, 5, 25)
    psi = random_state(rng, 5)
    m = matrix_of(h).matrix
    for st in _both(5, psi):
        assert abs(expectation(st, h) - np.vdot(psi, m @ psi).real) < 1e-12
        tv = term_expectations(st, h)
        assert abs(np.dot(tv, h.coeffs) - np.vdot(psi, m @ psi)) < 1e-12
        np.testing.assert_allclose(apply_pauli_sum(st, h).to_dense(), m @ psi, atol=1e-12)


def test_sparse_expectation_on_partial_support(kernel_impl, rng):
    vec = np.zeros(64, dtype=complex)
    idx = rng.choice(64, 9, replace=False)
    vec[idx] = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    vec /= np.linalg.norm(vec)
    h = random_hermitian_sum(rng, 6, 40)
    st = SparseState.from_dense(vec)
    assert abs(expectation(st, h) - np.vdot(vec, matrix_of(h).matrix @ vec).real) < 1e-12


def test_generator_is_exponential(kernel_impl, rng):
    import scipy.linalg

    g = PauliSum.from_terms(3, [(1j, "XYI"), (-0.5j, "YXZ")])
    psi = random_state(rng, 3)
    expect = scipy.linalg.expm(0.7 * matrix_of(g).matrix) @ psi
    for st in _both(3, psi):
        out = apply_generator(st, g, 0.7).to_dense()
        np.testing.assert_allclose(out, expect, atol=1e-13)


def test_noncommuting_generator_rejected():
    g = PauliSum.from_terms(1, [(1j, "X"), (1j, "Z")])
    with pytest.raises(ValueError):
        apply_generator(DenseState.basis(1), g, 0.1)


def test_inner_and_fidelity(rng):
    a, b = random_state(rng, 4), random_state(rng, 4)
    assert abs(inner(SparseState.from_dense(a), DenseState(4, b)) - np.vdot(a, b)) < 1e-14
    assert abs(fidelity(DenseState(4, a), DenseState(4, a)) - 1) < 1e-14


def test_sampling_is_seeded(kernel_impl):
    c = Circuit(3)
    for q in range(3):
        c.append(gate("h", q))
    st = apply_circuit(DenseState.basis(3), c)
    h1, h2 = sample(st, 4000, seed=5), sample(st, 4000, seed=5)
    assert h1 == h2 and sum(h1.values()) == 4000
    assert sample(st, 4000, seed=6) != h1
    sp = sample(SparseState.from_dense(st.to_dense()), 4000, seed=5)
    assert sp == h1


def test_sampled_expectation_converges(kernel_impl, rng):
    h = random_hermitian_sum(rng, 4, 8)
    psi = random_state(rng, 4)
    exact = expectation(DenseState(4, psi), h)
    est = sampled_expectation(DenseState(4, psi), h, 200_000, seed=3)
    assert abs(est - exact) < 5 * np.abs(h.coeffs).sum() / math.sqrt(200_000)


def test_trotter_exact_for_commuting_terms(kernel_impl, rng):
    h = PauliSum.from_terms(3, [(0.7, "ZZI"), (-0.4, "IZZ"), (0.2, "ZIZ"), (0.9, "III")])
    psi = random_state(rng, 3)
    out = trotter_evolve(DenseState(3, psi), h, 1.3, 1).to_dense()
    np.testing.assert_allclose(out, evolve_exact(lambda t: h, psi, 1.3, 1), atol=1e-13)


def test_trotter_first_order_convergence(kernel_impl, rng):
    def h_of_t(t):
        return PauliSum.from_terms(2, [(1.0 - t, "XI"), (1.0 - t, "IX"), (t, "ZZ"), (0.5 * t, "ZI")])

    psi = np.full(4, 0.5, dtype=complex)
    ref = evolve_exact(h_of_t, psi, 1.0, 400)
    errs = [np.linalg.norm(trotter_evolve(SparseState.from_dense(psi), h_of_t, 1.0, s).to_dense() - ref)
            for s in (20, 40)]
    assert errs[1] < 0.6 * errs[0]


def test_dump_roundtrip(kernel_impl):
    st = apply_circuit(SparseState.basis(5), random_circuit(5, 30, 2))
    text = dump_state(st)
    back = load_state_dump(text, 5)
    np.testing.assert_array_equal(back.to_dense(), st.to_dense())
    assert dump_state(DenseState(5, st.to_dense())) == text


@pytest.mark.parametrize("backend", [DenseBackend(), SparseBackend()], ids=["dense", "sparse"])
def test_backend_gradients_match_finite_difference(kernel_impl, backend, rng):
    h = random_hermitian_sum(rng, 4, 15)
    gens = [PauliSum.from_label("XYII", 1j), PauliSum.from_terms(4, [(0.5j, "YXII"), (0.5j, "XYII")]),
            PauliSum.from_label("IIZY", 1j)]
    st = backend.from_dense(random_state(rng, 4))
    g = backend.gradients(st, h, gens)
    eps = 1e-6
    for k, gen in enumerate(gens):
        fd = (backend.expectation(backend.apply_generator(st, gen, eps), h)
              - backend.expectation(backend.apply_generator(st, gen, -eps), h)) / (2 * eps)
        assert abs(fd - g[k]) < 1e-7


def test_line_energies_closed_form_matches_explicit(kernel_impl, rng):
    be = SparseBackend()
    h = random_hermitian_sum(rng, 4, 20)
    gens = [PauliSum.from_label("XYIZ", 1j), PauliSum.from_label("IYII", 0.5j),
            PauliSum.from_terms(4, [(0.5j, "YXII"), (0.5j, "XYII")])]
    st = be.from_dense(random_state(rng, 4))
    thetas = np.linspace(-2, 2, 7)
    out = be.line_energies(st, h, gens, thetas)
    for k, g in enumerate(gens):
        explicit = [be.expectation(be.apply_generator(st, g, t), h) for t in thetas]
        np.testing.assert_allclose(out[k], explicit, atol=1e-12)
