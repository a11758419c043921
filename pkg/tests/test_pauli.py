import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qemkit.oracles import matrix_of, pauli_string_matrix
from qemkit.pauli import (IsingModel, PauliString, PauliSum, commutator, number_operator, pauli_mul,
                          qubo_to_ising)

from conftest import random_hermitian_sum

labels = st.integers(1, 5).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def test_label_roundtrip_and_masks():
    p = PauliString.from_label("XIZY")
    assert p.label == "XIZY"
    assert p.x == 0b1001 and p.z == 0b1100
    assert p.weight == 3
    assert p.support == (0, 2, 3)


def test_single_qubit_products():
    X, Y, Z = (PauliString.from_label(s) for s in "XYZ")
    assert pauli_mul(X, Y) == PauliString.from_label("Z", phase=1)
    assert pauli_mul(Y, X) == PauliString.from_label("Z", phase=3)
    assert pauli_mul(Z, Z) == PauliString.identity(1)


@settings(max_examples=60, deadline=None)
@given(labels, st.data())
def test_string_product_matches_matrices(a, data):
    b = data.draw(st.text("IXYZ", min_size=len(a), max_size=len(a)))
    pa, pb = PauliString.from_label(a), PauliString.from_label(b)
    prod = pauli_mul(pa, pb)
    expect = pauli_string_matrix(a) @ pauli_string_matrix(b)
    np.testing.assert_allclose(prod.phase_value * pauli_string_matrix(prod.label), expect, atol=1e-14)
    assert pa.commutes(pb) == np.allclose(expect, pauli_string_matrix(b) @ pauli_string_matrix(a))


def test_sum_canonical_merge_and_cancel():
    h = PauliSum.from_terms(2, [(1.0, "XZ"), (0.5, "XZ"), (2.0, "ZZ"), (-2.0, "ZZ")])
    assert len(h) == 1
    assert h.coeffs[0] == 1.5
    assert PauliSum.from_label("XX") - PauliSum.from_label("XX") == PauliSum.zero(2)


def test_sum_product_matches_matrices(rng):
    a = random_hermitian_sum(rng, 3, 8)
    b = random_hermitian_sum(rng, 3, 6)
    np.testing.assert_allclose(matrix_of(a @ b).matrix, matrix_of(a).matrix @ matrix_of(b).matrix, atol=1e-12)
    ma, mb = matrix_of(a).matrix, matrix_of(b).matrix
    np.testing.assert_allclose(matrix_of(commutator(a, b)).matrix, ma @ mb - mb @ ma, atol=1e-12)


def test_hermiticity_flags():
    h = PauliSum.from_terms(2, [(1.0, "XY"), (0.3, "ZI")])
    assert h.is_hermitian()
    g = h.scale(1j)
    assert g.is_anti_hermitian() and not g.is_hermitian()
    assert matrix_of(h).is_hermitian()


def test_text_roundtrip(rng):
    h = random_hermitian_sum(rng, 4, 10) + PauliSum.from_label("YIIX", 0.25j)
    assert PauliSum.from_text(h.to_text()) == h


def test_number_operator_counts_ones():
    n = number_operator(3)
    diag = np.diag(matrix_of(n).matrix).real
    np.testing.assert_allclose(diag, [bin(k).count("1") for k in range(8)])


def test_width_limit():
    with pytest.raises(ValueError):
        PauliSum(64)


def test_qubo_to_ising_energies_agree(rng):
    Q = rng.standard_normal((5, 5))
    Q = Q + Q.T
    ising = qubo_to_ising(Q)
    for bits in itertools.product((0, 1), repeat=5):
        x = np.array(bits, dtype=float)
        assert np.isclose(ising.energy(1 - 2 * x), x @ Q @ x)
    back = IsingModel.from_pauli_sum(ising.to_pauli_sum())
    np.testing.assert_allclose(back.quadratic, ising.quadratic)


def test_qubo_to_ising_rejects_asymmetric():
    with pytest.raises(ValueError):
        qubo_to_ising(np.array([[0.0, 1.0], [0.0, 0.0]]))
