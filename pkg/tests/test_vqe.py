import math

import numpy as np
import pytest

from qemkit.chemistry import hf_reference, jordan_wigner, load_bundled
from qemkit.models import tfim_hamiltonian
from qemkit.mps import MpsBackend
from qemkit.oracles import ci_oracle, exact_ground_state, lie_closure_dimension, line_search_oracle
from qemkit.partitioned import PartitionedBackend
from qemkit.pauli import PauliSum, commutator, number_operator
from qemkit.statevector import DenseBackend, SparseBackend
from qemkit.vqe.adapt import AdaptOptions, OverlapOptions, adapt_vqe, mb_adapt_step, overlap_adapt
from qemkit.vqe.ansatz import AnsatzCircuit, tuccsd_ansatz
from qemkit.vqe.cnot import QEB_CNOT_COSTS, count_cnots, generator_cnots, pauli_rotation_cnots
from qemkit.vqe.gga import (GgaOptions, abscissae, check_gga_pool, fit_coefficients, gga_vqe, greedy_angles,
                            trig_minimum, trig_value)
from qemkit.vqe.optimizer import OptimizerOptions, adjoint_gradient, optimize_parameters
from qemkit.vqe.pools import OperatorPool, build_pool, cube_scale, minimal_complete_pool, odd_y_dimension, square_scale

H2_CI = -1.137270174660903


@pytest.fixture(scope="module")
def h2():
    m = load_bundled("h2_sto3g")
    return m, jordan_wigner(m)


# -- pools --------------------------------------------------------------

@pytest.mark.parametrize("name,sizes", [("h2_sto3g", (3, 3, 12)), ("lih_sto3g", (92, 92, 640))])
def test_pool_sizes(name, sizes):
    m = load_bundled(name)
    assert tuple(len(build_pool(k, m)) for k in ("fermionic_SD", "QEB", "qubit")) == sizes


@pytest.mark.parametrize("kind", ["fermionic_SD", "QEB", "qubit"])
def test_pool_generators_are_valid(kind):
    m = load_bundled("h4_sto3g")
    pool = build_pool(kind, m)
    num = number_operator(m.n_qubits)
    for g in pool.generators:
        assert g.is_anti_hermitian() and g.commuting_strings()
        if kind != "qubit":
            assert len(commutator(g, num)) == 0


def test_qeb_strips_parity_tails():
    m = load_bundled("h4_sto3g")
    for f, q in zip(build_pool("fsd", m).generators, build_pool("qeb", m).generators):
        np.testing.assert_array_equal(np.unique(f.xs), np.unique(q.xs))
        assert int(np.bitwise_or.reduce(q.zs & ~q.xs)) == 0


def test_cli_aliases():
    assert build_pool("mcp", 3).kind == "minimal_complete"
    with pytest.raises(ValueError):
        build_pool("nope", 3)


@pytest.mark.parametrize("n,size", [(2, 4), (3, 7), (4, 8), (5, 10), (6, 12)])
def test_minimal_complete_pool_size(n, size):
    assert len(minimal_complete_pool(n)) == size


@pytest.mark.parametrize("n", [2, 3, 4])
def test_minimal_complete_pool_closure(n):
    pool = minimal_complete_pool(n, verify=False)
    assert lie_closure_dimension(pool.generators) == odd_y_dimension(n)


def test_scales():
    assert square_scale(PauliSum.from_label("XY", 0.5j)) == pytest.approx(0.25)
    m = load_bundled("h2_sto3g")
    double = build_pool("fsd", m).generators[-1]
    assert square_scale(double) is None
    assert cube_scale(double) is not None


# -- CNOT counting --------------------------------------------------------

@pytest.mark.parametrize("w", range(1, 9))
def test_pauli_rotation_cost(w):
    g = PauliSum.from_label("Y" + "Z" * (w - 1) + "I" * (8 - w), 1j)
    assert generator_cnots(g, "qubit") == pauli_rotation_cnots(w) == 2 * (w - 1)


def test_qeb_costs():
    m = load_bundled("lih_sto3g")
    pool = build_pool("qeb", m)
    costs = {generator_cnots(g, "QEB") for g in pool.generators}
    assert costs == {QEB_CNOT_COSTS[2], QEB_CNOT_COSTS[4]} == {2, 13}
    for g in pool.generators:
        q, e = generator_cnots(g, "qubit"), generator_cnots(g, "QEB")
        # singles tie at 2; doubles are 6 vs 13
        assert (q, e) in ((2, 2), (6, 13))


def test_count_cnots_sums():
    gens = [PauliSum.from_label("XYII", 1j), PauliSum.from_label("XZZY", 1j)]
    assert count_cnots(gens) == 2 + 6
    with pytest.raises(ValueError):
        count_cnots([PauliSum.from_label("XYYI", 1j)], "QEB")


# -- selection ------------------------------------------------------------

def test_mb_adapt_step_order_and_ties():
    g = [0.1, -0.5, 0.5, 0.2, -0.05]
    assert mb_adapt_step(g, 1) == [1]
    assert mb_adapt_step(g, 3) == [1, 2, 3]
    assert mb_adapt_step(g, 5, threshold=0.1) == [1, 2, 3, 0]
    with pytest.raises(ValueError):
        mb_adapt_step(g, 0)


# -- ansatz and optimizer -------------------------------------------------

def test_ansatz_prepare_applies_in_order(h2):
    m, h = h2
    pool = build_pool("qubit", m)
    be = DenseBackend()
    ans = AnsatzCircuit(hf_reference(m), pool, [(0, 0.3), (5, -0.2)])
    manual = be.apply_generator(be.apply_generator(be.basis_state(4, 3), pool[0], 0.3), pool[5], -0.2)
    np.testing.assert_allclose(ans.prepare(be).to_dense(), manual.to_dense())
    with pytest.raises(ValueError):
        ans.with_thetas([1.0])


@pytest.mark.parametrize("backend", [DenseBackend(), SparseBackend()], ids=["dense", "sparse"])
def test_adjoint_gradient_matches_fd(h2, backend):
    m, h = h2
    pool = build_pool("qubit", m)
    ans = AnsatzCircuit(hf_reference(m), pool, [(0, 0.3), (5, -0.2), (7, 0.6)])
    value, grad = adjoint_gradient(ans, h, backend, ans.thetas)
    assert abs(value - backend.expectation(ans.prepare(backend), h)) < 1e-13
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1e-6
        fd = (backend.expectation(ans.prepare(backend, ans.thetas + e), h)
              - backend.expectation(ans.prepare(backend, ans.thetas - e), h)) / 2e-6
        assert abs(fd - grad[k]) < 1e-8


def test_tuccsd_reaches_ci(h2):
    m, h = h2
    ans = tuccsd_ansatz(m)
    assert ans.n_params == 3
    res = optimize_parameters(ans, h, SparseBackend())
    assert res.ok and abs(res.energy - H2_CI) < 1e-8


def test_shift_rule_gradients_on_mps(h2):
    m, h = h2
    res = optimize_parameters(tuccsd_ansatz(m), h, MpsBackend(cutoff=0.0), OptimizerOptions(gradient="shift"))
    assert abs(res.energy - H2_CI) < 1e-8


def test_optimizer_budget_flag(h2):
    m, h = h2
    res = optimize_parameters(tuccsd_ansatz(m), h, SparseBackend(), OptimizerOptions(max_evals=2))
    assert res.status == "budget" and not res.ok


# -- ADAPT ----------------------------------------------------------------

@pytest.mark.parametrize("kind", ["fermionic_SD", "QEB", "qubit"])
@pytest.mark.parametrize("backend", [DenseBackend(), SparseBackend(), MpsBackend(cutoff=0.0),
                                     PartitionedBackend(eta=1)], ids=["dense", "sparse", "mps", "partitioned"])
def test_adapt_h2_reaches_ci(h2, kind, backend):
    m, h = h2
    res = adapt_vqe(h, build_pool(kind, m), backend, AdaptOptions(grad_tol=1e-6), hf_reference(m))
    assert res.status == "converged"
    assert abs(res.energy - H2_CI) < 1e-8
    assert np.all(np.diff(res.energies) <= 1e-12)


def test_adapt_h4_monotone_and_close():
    m = load_bundled("h4_sto3g")
    h = jordan_wigner(m)
    res = adapt_vqe(h, build_pool("qeb", m), SparseBackend(), AdaptOptions(grad_tol=1e-4), hf_reference(m))
    assert np.all(np.diff(res.energies) <= 1e-12)
    assert res.energy - ci_oracle(m)[0] < 1e-4
    assert res.cnot_count["qubit"] < res.cnot_count["QEB"]


def test_mb_adapt_adds_batches(h2):
    m, h = h2
    res = adapt_vqe(h, build_pool("qubit", m), SparseBackend(),
                    AdaptOptions(batch_size=2, grad_tol=1e-6), hf_reference(m))
    assert res.method == "mb-adapt"
    assert len(res.trace[1].selected) == 2
    assert abs(res.energy - H2_CI) < 1e-8


def test_shot_gradients_are_seeded(h2):
    m, h = h2
    pool = build_pool("qubit", m)
    opts = AdaptOptions(shots=200, seed=9, max_iter=3)
    a = adapt_vqe(h, pool, SparseBackend(), opts, hf_reference(m)).to_dict()
    b = adapt_vqe(h, pool, SparseBackend(), opts, hf_reference(m)).to_dict()
    assert a == b
    assert np.all(np.diff([r["energy"] for r in a["trace"]]) <= 1e-12)


def test_overlap_adapt_reaches_target(h2):
    m, h = h2
    be = SparseBackend()
    _, vec = exact_ground_state(h)
    ans = overlap_adapt(be.from_dense(vec), build_pool("qubit", m), be, OverlapOptions(), hf_reference(m))
    assert ans.info["overlap"] > 1 - 1e-8
    assert abs(be.expectation(ans.prepare(be), h) - H2_CI) < 1e-7


# -- GGA ------------------------------------------------------------------

def test_five_point_fit_is_exact(rng):
    c = rng.standard_normal(5)
    u = 2 * math.pi * np.arange(5) / 5
    np.testing.assert_allclose(fit_coefficients(trig_value(c, u)), c, atol=1e-13)


@pytest.mark.parametrize("seed", range(20))
def test_trig_minimum_is_global(seed):
    c = np.random.default_rng(seed).standard_normal(5)
    u, e = trig_minimum(c)
    grid = np.linspace(0, 2 * math.pi, 200_001)
    assert e <= trig_value(c, grid).min() + 1e-12
    assert abs(trig_value(c, u) - e) < 1e-14


def test_gga_rejects_unsuitable_pool():
    bad = OperatorPool("custom", 2, [PauliSum.from_terms(2, [(1j, "XY"), (0.5j, "ZZ")])], ["bad"])
    with pytest.raises(ValueError):
        check_gga_pool(bad)


def test_greedy_angle_matches_grid_oracle():
    h = tfim_hamiltonian(4)
    pool = build_pool("mcp", 4)
    scales = check_gga_pool(pool)
    be = SparseBackend()
    state = be.apply_generator(be.basis_state(4), pool[0], 0.4)
    ts, es = greedy_angles(be, state, h, pool.generators, scales)
    for k, g in enumerate(pool.generators):
        # single strings: exp((t + pi/s) G) = -exp(t G), so the energy period is pi/s
        period = math.pi / scales[k]
        t_ref, e_ref = line_search_oracle(h, state.to_dense(), g, period=period)
        d = (ts[k] - t_ref + period / 2) % period - period / 2
        assert abs(d) < 1e-9
        assert abs(es[k] - e_ref) < 1e-10


def test_gga_tfim_monotone():
    h = tfim_hamiltonian(4)
    res = gga_vqe(h, build_pool("mcp", 4), SparseBackend(), GgaOptions(max_iter=30))
    assert np.all(np.diff(res.energies) <= 1e-12)
    assert res.energy < res.energies[0] - 1.0
    assert res.energy >= exact_ground_state(h)[0] - 1e-12


def test_abscissae_shape():
    t = abscissae([1.0, 2.0])
    assert t.shape == (2, 5) and t[1, 1] == pytest.approx(math.pi / 5)
