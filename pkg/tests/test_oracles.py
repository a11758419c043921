import math

import numpy as np
import pytest

from qemkit.chemistry import MolecularIntegrals
from qemkit.models import tfim_hamiltonian
from qemkit.oracles import (ae_distribution, ci_oracle, exact_ground_state, lie_closure_dimension,
                            line_search_oracle, matrix_of, pauli_string_matrix, tfim_ground_energy)
from qemkit.pauli import PauliSum

from conftest import random_hermitian_sum


def test_single_z():
    np.testing.assert_array_equal(matrix_of(PauliSum.from_label("Z")).matrix, np.diag([1, -1]))


def test_xx_is_antidiagonal():
    np.testing.assert_array_equal(matrix_of(PauliSum.from_label("XX")).matrix.real, np.fliplr(np.eye(4)))


def test_sparse_and_dense_string_matrices_agree():
    for label in ("XYZI", "YYXZ", "IZXY", "YIIY"):
        np.testing.assert_array_equal(pauli_string_matrix(label, sparse=True).toarray(), pauli_string_matrix(label))


def test_random_hermitian_has_real_spectrum(rng):
    m = matrix_of(random_hermitian_sum(rng, 4, 20))
    assert m.is_hermitian()
    assert np.max(np.abs(np.linalg.eigvals(m.matrix).imag)) < 1e-12


def test_cap():
    with pytest.raises(ValueError):
        matrix_of(PauliSum.identity(15))


def test_ground_state_of_z():
    e, v = exact_ground_state(PauliSum.from_label("Z"))
    assert e == -1.0 and abs(abs(v[1]) - 1) < 1e-14


def test_two_site_ising_closed_form():
    assert abs(exact_ground_state(tfim_hamiltonian(2))[0] + math.sqrt(5)) < 1e-13


@pytest.mark.parametrize("n,j,g", [(3, 1.0, 1.0), (5, 1.0, 0.4), (6, 0.7, 1.3), (13, 1.0, 1.0)])
def test_free_fermion_energy_matches_diagonalization(n, j, g):
    assert abs(exact_ground_state(tfim_hamiltonian(n, j, g))[0] - tfim_ground_energy(n, j, g)) < 1e-9


def test_ci_cap():
    m = MolecularIntegrals(7, 2, 0.0, np.zeros((7, 7)), np.zeros((7,) * 4))
    with pytest.raises(ValueError):
        ci_oracle(m)


def test_line_search_single_rotation():
    # exp(i t Y)|0> has energy cos(2t) under Z
    t, e = line_search_oracle(PauliSum.from_label("Z"), np.array([1, 0]), PauliSum.from_label("Y", 1j),
                              period=math.pi)
    assert abs(t - math.pi / 2) < 1e-9 and abs(e + 1) < 1e-14


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("a", [0.0, 0.2, 0.5, 0.75])
def test_ae_distribution_normalized(a, m):
    d = ae_distribution(a, m)
    assert abs(sum(d.values()) - 1) < 1e-12
    assert max(d.values()) <= 1 + 1e-12


def test_ae_distribution_is_sharp_on_grid():
    assert ae_distribution(0.5, 2) == pytest.approx({0.0: 0.0, 0.5: 1.0, 1.0: 0.0}, abs=1e-12)


def test_lie_closure_of_y():
    assert lie_closure_dimension([PauliSum.from_label("Y", 1j)]) == 1
    assert lie_closure_dimension([PauliSum.from_label("YI", 1j), PauliSum.from_label("ZY", 1j)]) == 3
