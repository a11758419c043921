import math

import numpy as np
import pytest

from qemkit.oracles import ae_distribution
from qemkit.qwalk import (MarkovChainSpec, analyze_chain, bundled_chains, classical_mcmc_mean, estimate_mean,
                          fixed_point_check, load_chain, metropolis_chain, permute_qubits, stationary_distribution,
                          symmetric_chain, szegedy_walk, total_variation, two_state_chain, walk_phases)


def test_bundled_chains():
    assert set(bundled_chains()) >= {"sym2", "biased2", "metropolis4"}
    assert load_chain("sym2").mean == 0.5


@pytest.mark.parametrize("P", [[[0.5, 0.4]], [[1.2, -0.2], [0.5, 0.5]], [[0.5, 0.6], [0.5, 0.5]]])
def test_invalid_matrices(P):
    with pytest.raises(ValueError):
        MarkovChainSpec(np.array(P))


def test_wrong_pi_and_f():
    with pytest.raises(ValueError):
        MarkovChainSpec(np.array([[0.9, 0.1], [0.5, 0.5]]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        MarkovChainSpec(np.eye(2), np.array([0.5, 0.5]), np.array([0.0, 2.0]))


def test_stationary_and_reversible():
    c = metropolis_chain([1, 2, 3, 4])
    np.testing.assert_allclose(c.pi, np.arange(1, 5) / 10, atol=1e-15)
    np.testing.assert_allclose(stationary_distribution(c.P), c.pi, atol=1e-12)
    assert c.is_reversible()
    cyc = MarkovChainSpec(np.roll(np.eye(3), 1, axis=1) * 0.8 + np.eye(3) * 0.2)
    assert not cyc.is_reversible()
    with pytest.raises(ValueError):
        szegedy_walk(cyc)


def test_gap():
    assert analyze_chain(symmetric_chain(0.5)).gap == pytest.approx(1.0)
    assert analyze_chain(symmetric_chain(0.1)).gap == pytest.approx(0.2)
    assert analyze_chain(MarkovChainSpec(np.eye(2), np.array([0.5, 0.5]))).gap == pytest.approx(0.0)


def test_json_roundtrip():
    c = metropolis_chain([1, 2, 3], f=[0, 0.5, 1])
    back = MarkovChainSpec.from_json(c.to_json())
    np.testing.assert_array_equal(back.P, c.P)
    assert back.mean == c.mean


@pytest.mark.parametrize("c", [symmetric_chain(0.3), two_state_chain(0.75), metropolis_chain([1, 2, 3, 4]),
                               metropolis_chain([1, 1, 2])], ids=["sym", "two", "metro4", "metro3"])
def test_walk_is_unitary_and_fixes_stationary_state(c):
    w = szegedy_walk(c)
    W = w.matrix()
    np.testing.assert_allclose(W.T @ W, np.eye(W.shape[0]), atol=1e-12)
    v = w.stationary_state()
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    assert np.linalg.norm(w.apply(v) - v) < 1e-12
    # gate sequence and direct application agree
    rng = np.random.default_rng(0)
    x = rng.standard_normal(W.shape[0]) + 1j * rng.standard_normal(W.shape[0])
    np.testing.assert_allclose(W @ x, w.apply(x), atol=1e-12)


def test_walk_phases_match_spectrum():
    c = symmetric_chain(0.3)
    W = szegedy_walk(c).matrix()
    phases = np.sort(np.abs(np.angle(np.linalg.eigvals(W))))
    for p in walk_phases(c):
        p = min(p, 2 * math.pi - p)
        assert np.min(np.abs(phases - p)) < 1e-8


def test_fixed_point_state():
    residual, out, v = fixed_point_check()
    assert residual < 1e-10
    np.testing.assert_allclose(np.abs(out) ** 2, np.abs(v) ** 2, atol=1e-15)


def test_permute_qubits_moves_bits():
    v = np.zeros(8)
    v[0b001] = 1.0
    # new qubit 2 is old qubit 0
    assert np.flatnonzero(permute_qubits(v, (1, 2, 0)))[0] == 0b100


@pytest.mark.parametrize("a", [0.0, 0.25, 0.5, 0.67, 0.75, 1.0])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_emulated_ae_matches_closed_form(a, m):
    c = two_state_chain(a, [0.0, 1.0])
    res = estimate_mean(c, m=m, shots=10, seed=0)
    ref = ae_distribution(a, m)
    assert set(res.probabilities) == set(ref)
    for k, p in ref.items():
        assert abs(res.probabilities[k] - p) < 1e-12


def test_ae_on_grid_point_is_sharp():
    res = estimate_mean(load_chain("sym2"), m=2, shots=1000, seed=0)
    assert res.histogram == {0.5: 1000}
    assert res.modal == 0.5 and res.postselected == 1000


def test_ae_is_seeded_and_tv_small():
    c = load_chain("metropolis4")
    a, b = estimate_mean(c, m=3, shots=10_000, seed=4), estimate_mean(c, m=3, shots=10_000, seed=4)
    assert a.histogram == b.histogram
    assert total_variation(a.histogram, a.probabilities, a.shots) < 0.02


def test_ae_rejects_zero_bits():
    with pytest.raises(ValueError):
        estimate_mean(symmetric_chain(0.5), m=0)


@pytest.mark.parametrize("seed", range(3))
def test_classical_mcmc_converges(kernel_impl, seed):
    c = metropolis_chain([1, 2, 3, 4], f=[0, 0.3, 0.7, 1.0])
    assert abs(classical_mcmc_mean(c, 200_000, seed=seed) - c.mean) < 0.01


def test_classical_mcmc_kernels_agree():
    from qemkit import qwalk
    from qemkit.kernels import get

    from conftest import IMPLS

    c = metropolis_chain([1, 2, 3], f=[0, 0.5, 1])
    vals = []
    for name in IMPLS:
        old = qwalk._k
        qwalk._k = get(name)
        try:
            vals.append(classical_mcmc_mean(c, 5000, seed=1))
        finally:
            qwalk._k = old
    assert len(set(vals)) == 1
