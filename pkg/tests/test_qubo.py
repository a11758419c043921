import itertools
import warnings

import numpy as np
import pytest

from qemkit.oracles import matrix_of
from qemkit.qubo import (AnnealSchedule, CandidateSites, DensityGrid, QuboProblem, adiabatic_hamiltonian,
                         blockade_bound, build_qubo, gaussian_density, gaussian_on_grid, load_density,
                         make_grid, planted_pocket, pocket_qubo, propose_sites, save_cube, score_recovery,
                         solve_adiabatic, solve_exact, solve_sa)


def _random_qubo(rng, n):
    Q = rng.standard_normal((n, n))
    return QuboProblem((Q + Q.T) / 2)


def _brute(q):
    best = min(itertools.product((0, 1), repeat=q.n), key=lambda x: (q.cost(x), x[::-1]))
    return q.cost(best)


def test_gaussian_has_unit_mass():
    grid = make_grid(np.zeros(3), np.full(3, 8.0), 0.25)
    assert abs(grid.integrate(gaussian_on_grid(grid, np.full(3, 4.0), 0.6)) - 1) < 1e-6


def test_negative_density_is_clamped():
    grid = make_grid(np.zeros(3), np.ones(3), 0.5)
    vals = -np.ones(grid.shape)
    with pytest.warns(UserWarning):
        g = DensityGrid(grid.origin, grid.axes, vals)
    assert g.values.min() == 0.0 and g.clamped


def test_cube_roundtrip(tmp_path):
    pocket = planted_pocket(n_waters=3, n_decoys=1, box=8.0, seed=2)
    path = tmp_path / "d.cube"
    save_cube(pocket.grid, path)
    back = load_density(path)
    np.testing.assert_allclose(back.values, pocket.grid.values, rtol=1e-15)
    np.testing.assert_allclose(back.origin, pocket.grid.origin, atol=1e-12)
    np.testing.assert_allclose(back.axes, pocket.grid.axes, atol=1e-12)


def test_impossible_packing_raises():
    with pytest.raises(ValueError):
        planted_pocket(n_waters=4, n_decoys=0, box=6.0)


def test_cube_in_bohr_is_converted(tmp_path):
    text = ("c\nc\n    1  0.0 0.0 0.0\n    2  1.0 0.0 0.0\n    2  0.0 1.0 0.0\n    2  0.0 0.0 1.0\n"
            "    8  0.0  0.0 0.0 0.0\n 1 2 3 4 5 6 7 8\n")
    (tmp_path / "b.cube").write_text(text)
    g = load_density(tmp_path / "b.cube")
    assert abs(g.spacing[0] - 0.529177210903) < 1e-9
    # per bohr^3 becomes per angstrom^3
    assert g.values[1, 1, 1] == pytest.approx(8 / 0.529177210903**3, rel=1e-12)


@pytest.mark.parametrize("text", ["", "c\nc\n 1 0 0 0\n 2 1 0 0\n", "c\nc\n 1 0 0 0\n 2 1 0 0\n 2 0 1 0\n 2 0 0 1\n 8 0 0 0 0\n 1 2 3\n"])
def test_malformed_cube(tmp_path, text):
    (tmp_path / "bad.cube").write_text(text)
    with pytest.raises(ValueError):
        load_density(tmp_path / "bad.cube")


def test_sites_are_peaks_and_separated():
    pocket = planted_pocket(seed=4)
    sites = propose_sites(pocket.grid, 0.05 * pocket.grid.values.max(), min_sep=1.5)
    d = np.linalg.norm(sites.positions[:, None] - sites.positions[None], axis=-1)
    assert d[np.triu_indices(len(sites), 1)].min() >= 1.5
    assert np.all(np.diff(sites.density) <= 0)
    back = CandidateSites.from_json(sites.to_json())
    np.testing.assert_array_equal(back.positions, sites.positions)


def test_qubo_cost_is_l2_residual():
    grid = make_grid(np.zeros(3), np.full(3, 8.0), 0.25)
    centers = np.array([[3.0, 4.0, 4.0], [5.5, 4.0, 4.0]])
    grid = DensityGrid(grid.origin, grid.axes, gaussian_density(grid, centers, 0.5).values)
    sites = CandidateSites(np.vstack([centers, [[4.0, 6.5, 4.0]]]), 0.5, 1.0)
    q = build_qubo(grid, sites)
    for bits in itertools.product((0, 1), repeat=3):
        x = np.array(bits)
        model = sum(gaussian_on_grid(grid, p, 0.5) for p, b in zip(sites.positions, bits) if b) + 0 * grid.values
        resid = grid.integrate((grid.values - model) ** 2)
        assert abs(q.cost(x) + q.offset - resid) < 1e-9
    assert solve_exact(q).selected.tolist() == [0, 1]


def test_blockade_excludes_close_pairs():
    pocket = planted_pocket(seed=1)
    sites, q = pocket_qubo(pocket, exclusion_radius=3.0)
    assert q.blocked and q.blockade_penalty >= blockade_bound(np.diag(q.Q) - 0)
    x = solve_exact(q).x
    for i, j in q.blocked:
        assert not (x[i] and x[j])


def test_narrow_gaussian_warns():
    grid = make_grid(np.zeros(3), np.full(3, 4.0), 0.5)
    grid = DensityGrid(grid.origin, grid.axes, np.ones(grid.shape))
    with pytest.warns(UserWarning):
        build_qubo(grid, CandidateSites([[2.0, 2.0, 2.0]], 0.2, 1.0))


def test_json_roundtrip(rng):
    q = _random_qubo(rng, 6)
    back = QuboProblem.from_json(q.to_json())
    np.testing.assert_array_equal(back.Q, q.Q)
    with pytest.raises(ValueError):
        QuboProblem(np.array([[0.0, 1.0], [2.0, 0.0]]))


@pytest.mark.parametrize("seed", range(5))
def test_exact_solver_is_optimal(kernel_impl, seed):
    q = _random_qubo(np.random.default_rng(seed), 9)
    sol = solve_exact(q)
    assert abs(sol.cost - _brute(q)) < 1e-12
    assert abs(q.all_costs().min() - sol.cost) < 1e-12


def test_exact_cap():
    with pytest.raises(ValueError):
        solve_exact(QuboProblem(np.eye(26)))


@pytest.mark.parametrize("seed", range(5))
def test_sa_matches_exact_on_small_instances(kernel_impl, seed):
    q = _random_qubo(np.random.default_rng(100 + seed), 12)
    sa = solve_sa(q, AnnealSchedule(sweeps=500), seed=seed)
    assert abs(sa.cost - solve_exact(q).cost) < 1e-9
    assert sa.info["best_trace"][-1] == pytest.approx(sa.cost)


def test_sa_is_seeded(kernel_impl, rng):
    q = _random_qubo(rng, 10)
    a, b = solve_sa(q, seed=3), solve_sa(q, seed=3)
    np.testing.assert_array_equal(a.x, b.x)


def test_adiabatic_hamiltonian_diagonal_matches_costs(rng):
    q = _random_qubo(rng, 4)
    h, scale = adiabatic_hamiltonian(q)
    diag = np.diag(matrix_of(h).matrix).real * scale
    np.testing.assert_allclose(diag, q.all_costs(), atol=1e-12)


def test_adiabatic_finds_optimum_when_slow(kernel_impl):
    # well-gapped instance; near-degenerate optima can cross diabatically
    q = _random_qubo(np.random.default_rng(3), 5)
    sol = solve_adiabatic(q, total_time=40.0, steps=800, seed=1)
    assert abs(sol.cost - solve_exact(q).cost) < 1e-12
    assert sol.info["success_probability"] > 0.9


def test_adiabatic_instant_is_uniform():
    q = _random_qubo(np.random.default_rng(9), 3)
    sol = solve_adiabatic(q, total_time=0.0, seed=0)
    assert abs(sol.info["success_probability"] - 1 / 8) < 1e-12


def test_planted_recovery():
    pocket = planted_pocket(seed=0)
    sites, q = pocket_qubo(pocket)
    assert q.n <= 20
    assert score_recovery(solve_exact(q), sites, pocket.waters) >= 80.0


def test_score_recovery_is_one_to_one():
    sites = CandidateSites([[0, 0, 0], [0.1, 0, 0], [5, 0, 0]])
    from qemkit.qubo import PlacementSolution

    sol = PlacementSolution(np.array([1, 1, 0]), 0.0, "x", 0.0)
    assert score_recovery(sol, sites, np.array([[0.05, 0, 0], [5, 0, 0]]), 1.0) == 50.0
