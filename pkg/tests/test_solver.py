"""Saddle-point assembly and solver tests.

Includes a problem with an exactly known optimal value: minimizing the
range-variation integrand with zero data cost over paths between two fixed
endpoints (the value is the net rise, certified by the constant dual form).
"""

import numpy as np
import pytest
from scipy.optimize import minimize

from curlift.cubical import CubicalComplex, dirichlet_datum
from curlift.lifting import BrachistochroneCost, CostVolume, ScalarTVCost
from curlift.solver import (
    SolverConfig,
    SolverDivergence,
    assemble,
    pdhg_run,
    project_affine_rows,
    project_simplex_rows,
    residuals,
)
from curlift.whitney import generate_samples


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def qp_simplex_oracle(v, target=1.0):
    n = len(v)
    cons = [{"type": "eq", "fun": lambda x: np.sum(x) - target}]
    bounds = [(0.0, None)] * n
    res = minimize(lambda x: 0.5 * np.sum((x - v) ** 2), np.full(n, target / n),
                   bounds=bounds, constraints=cons, method="SLSQP",
                   options={"ftol": 1e-14, "maxiter": 500})
    return res.x


@pytest.mark.parametrize("seed", range(5))
def test_simplex_projection_against_qp(seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((6, 4)) * 2
    P = project_simplex_rows(V, target=1.0)
    for row_v, row_p in zip(V, P):
        ref = qp_simplex_oracle(row_v)
        assert np.allclose(row_p, ref, atol=1e-6)
    assert np.allclose(P.sum(axis=1), 1.0)
    assert np.all(P >= 0)


def test_simplex_projection_targets():
    V = np.array([[2.0, 0.0, 0.0]])
    assert np.allclose(project_simplex_rows(V, 2.0), [[2.0, 0.0, 0.0]])
    P = project_simplex_rows(np.array([[0.0, 0.0]]), 3.0)
    assert np.allclose(P, [[1.5, 1.5]])


def test_affine_projection():
    rng = np.random.default_rng(0)
    V = rng.standard_normal((5, 3))
    P = project_affine_rows(V, target=2.0)
    assert np.allclose(P.sum(axis=1), 2.0)
    # projection moves along the constant direction only
    assert np.allclose(P - V, (P - V)[:, :1])


# ---------------------------------------------------------------------------
# assembly structure
# ---------------------------------------------------------------------------


def small_tv_problem(cells=(3, 2), rho_val=0.0, boundary="dirichlet",
                     endpoints=((0, 0), (3, 2)), nonneg=()):
    cx = CubicalComplex(np.ones(cells, dtype=bool))
    rho = CostVolume(np.full(tuple(c + 1 for c in cells), rho_val),
                     spacing=np.ones(2))
    model = ScalarTVCost(rho, n=1)
    Z = generate_samples(cx, "midpoints+vertices", codomain_axes=(1,))
    datum = None
    if boundary == "dirichlet":
        a, b = endpoints
        datum = dirichlet_datum(cx, 0, [(a, -1.0), (b, 1.0)])
    prob = assemble(cx, 1, model, Z, boundary=boundary, datum=datum,
                    pushforward=("first",), nonneg=nonneg)
    return cx, model, prob


def test_assemble_shapes_and_blocks():
    cx, model, prob = small_tv_problem()
    nT = cx.num_cubes(1)
    m = prob.lam_rows
    assert prob.n_T == nT
    assert prob.lam_cols == 2
    assert prob.n_omega == nT
    assert prob.K.shape == (nT + 2 * m, nT + prob.n_phi)
    # top-left block is the volume pairing (identity on the unit grid)
    topleft = prob.K[:nT, :nT].toarray()
    assert np.allclose(topleft, np.eye(nT))
    # top-right couples T against the boundary operator
    B = cx.boundary_matrix(1)
    act = prob.meta["phi_active"]
    assert np.allclose(prob.K[:nT, nT:].toarray(), B.T.toarray()[:, act])


def test_assemble_validation():
    cx = CubicalComplex(np.ones((3, 2), dtype=bool))
    rho = CostVolume(np.zeros((4, 3)), spacing=np.ones(2))
    model = ScalarTVCost(rho, n=1)
    Z = generate_samples(cx, "vertices")
    with pytest.raises(ValueError):
        assemble(cx, 1, model, Z, pushforward=("sideways",))
    # n == N here, so "last" is legal; a nonneg flag without its block is not
    with pytest.raises(ValueError):
        assemble(cx, 1, model, Z, pushforward=("first",), nonneg=("last",))
    with pytest.raises(ValueError):
        assemble(cx, 1, model, Z, boundary="free",
                 datum=dirichlet_datum(cx, 0, [((0, 0), 1.0)]))
    with pytest.raises(ValueError):
        assemble(cx, 1, model, Z, boundary="weird")


def test_last_pushforward_requires_square():
    cx = CubicalComplex(np.ones((3, 3, 2), dtype=bool))
    rho = CostVolume(np.zeros((4, 4, 3)), spacing=np.ones(3))
    model = ScalarTVCost(rho, n=2)
    Z = generate_samples(cx, "vertices")
    with pytest.raises(ValueError):
        assemble(cx, 2, model, Z, pushforward=("first", "last"))


def test_free_boundary_restricts_multiplier():
    cx, model, prob = small_tv_problem(boundary="free")
    act = prob.meta["phi_active"]
    bases = cx.cube_bases(0)
    axes = cx.cube_axes(0)
    # active 0-cubes must not sit on the domain-axis (axis 0) boundary
    assert np.all(bases[act][:, 0] != 0)
    assert np.all(bases[act][:, 0] != cx.cells[0])
    # but may sit on the range-axis boundary
    assert np.any(bases[act][:, 1] == 0)


def test_fibers_cover_all_leading_edges():
    cx, model, prob = small_tv_problem()
    fib = prob.fibers[0]
    covered = sorted(i for ix in fib.indices for i in ix)
    lead = [i for i in range(cx.num_cubes(1))
            if tuple(cx.cube_axes(1)[i]) == (0,)]
    assert covered == lead
    # one fiber per projected cell
    assert len(fib.indices) == cx.cells[0]


# ---------------------------------------------------------------------------
# solver behaviour
# ---------------------------------------------------------------------------


def test_exact_value_vertical_variation():
    # zero data cost: the optimum equals the net rise of the endpoints,
    # certified by the constant dual 1-form with unit range component
    cx, model, prob = small_tv_problem(cells=(3, 2), rho_val=0.0,
                                       endpoints=((0, 0), (3, 2)))
    res = pdhg_run(prob, SolverConfig(max_iters=20000, tol=1e-6,
                                      check_every=25))
    assert res.report.converged
    assert abs(res.report.energy - 2.0) < 1e-3
    assert res.report.violations["boundary"] < 1e-4
    assert res.report.violations["pushforward_first"] < 1e-4


def test_exact_value_with_nonneg_fibers():
    cx, model, prob = small_tv_problem(cells=(3, 2), rho_val=0.0,
                                       endpoints=((0, 0), (3, 2)),
                                       nonneg=("first",))
    res = pdhg_run(prob, SolverConfig(max_iters=20000, tol=1e-6,
                                      check_every=25))
    assert abs(res.report.energy - 2.0) < 1e-3
    # every fiber entry is nonnegative after the simplex projection
    for ix in prob.fibers[0].indices:
        assert np.all(res.T[np.asarray(ix)] >= -1e-12)


def test_flat_path_costs_nothing():
    cx, model, prob = small_tv_problem(cells=(3, 2), rho_val=0.0,
                                       endpoints=((0, 1), (3, 1)))
    res = pdhg_run(prob, SolverConfig(max_iters=20000, tol=1e-6))
    assert abs(res.report.energy) < 1e-3


def test_residuals_recomputable_from_state():
    cx, model, prob = small_tv_problem()
    res = pdhg_run(prob, SolverConfig(max_iters=500, tol=0.0, check_every=50))
    p, d = residuals(res.state)
    assert np.isclose(p, res.report.primal_res)
    assert np.isclose(d, res.report.dual_res)


def test_determinism_bitwise():
    runs = []
    for _ in range(2):
        cx, model, prob = small_tv_problem()
        res = pdhg_run(prob, SolverConfig(max_iters=2000, tol=1e-6))
        runs.append(res)
    a, b = runs
    assert a.report.iterations == b.report.iterations
    assert np.array_equal(a.T, b.T)
    assert np.array_equal(a.lam, b.lam)
    assert np.array_equal(a.omega, b.omega)
    assert np.array_equal(a.phi, b.phi)


def test_divergence_guard():
    cx, model, prob = small_tv_problem()
    with pytest.raises(SolverDivergence):
        pdhg_run(prob, SolverConfig(max_iters=5000, tol=1e-12,
                                    divergence_bound=1e-9))


def test_scalar_preconditioning_also_converges():
    cx, model, prob = small_tv_problem()
    res = pdhg_run(prob, SolverConfig(max_iters=30000, tol=1e-5,
                                      precond="scalar"))
    assert abs(res.report.energy - 2.0) < 5e-3


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(theta=1.5)
    with pytest.raises(ValueError):
        SolverConfig(precond="magic")


def test_brachistochrone_smoke():
    # monotone ramp on a coarse grid; checks the full pipeline end to end
    cells = (4, 3)
    cx = CubicalComplex(np.ones(cells, dtype=bool))
    model = BrachistochroneCost(g=9.81, y_min=1.0, origin=(0.0, 1.0))
    Z = generate_samples(cx, "midpoints+vertices", codomain_axes=(1,))
    datum = dirichlet_datum(cx, 0, [((0, 0), -1.0), ((4, 3), 1.0)])
    prob = assemble(cx, 1, model, Z, boundary="dirichlet", datum=datum,
                    pushforward=("first",))
    res = pdhg_run(prob, SolverConfig(max_iters=30000, tol=1e-5))
    assert res.report.violations["boundary"] < 1e-3
    assert res.report.violations["pushforward_first"] < 1e-3
    assert res.report.energy > 0.1
