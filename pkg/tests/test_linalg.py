import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gpe_multigrid.linalg import SaddleSystem, SolverConfig, SolverError, SpdSolver, solve_saddle, solve_spd

from conftest import small_problem


def laplacian_2d(n):
    t = sp.diags([-1, 2, -1], [-1, 0, 1], shape=(n, n))
    e = sp.identity(n)
    return (sp.kron(t, e) + sp.kron(e, t)).tocsr()


@pytest.mark.parametrize("direct_max", [10**6, 0])
def test_spd_solve_matches_dense(direct_max, rng):
    A = laplacian_2d(12)
    b = rng.standard_normal(A.shape[0])
    x = solve_spd(A, b, tol=1e-12, direct_max_dofs=direct_max)
    np.testing.assert_allclose(x, np.linalg.solve(A.toarray(), b), rtol=1e-9, atol=1e-10)
    assert np.linalg.norm(b - A @ x) <= 1e-12 * np.linalg.norm(b)


def test_spd_zero_rhs():
    assert not np.any(solve_spd(laplacian_2d(4), np.zeros(16)))


@pytest.mark.parametrize("direct_max", [10**6, 0])
def test_indefinite_matrix_rejected(direct_max, rng):
    A = (laplacian_2d(10) - 1.0 * sp.identity(100)).tocsr()
    with pytest.raises(SolverError):
        SpdSolver(A, direct_max_dofs=direct_max).solve(rng.standard_normal(100))


def test_warm_start_reused_solver(rng):
    A = laplacian_2d(20)
    s = SpdSolver(A, direct_max_dofs=0)
    b = rng.standard_normal(400)
    x = s.solve(b)
    np.testing.assert_allclose(s.solve(b, x0=x), x, atol=1e-9)


def test_saddle_3x3_by_hand():
    sys = SaddleSystem(sp.csr_matrix(np.diag([2.0, 4.0])), np.array([1.0, 1.0]), np.array([2.0, 4.0]), 3.0)
    # x = (1 - y/2, 1 - y/4), x1 + x2 = 3  =>  y = -4/3
    x, y = solve_saddle(sys, 1e-12)
    assert y == pytest.approx(-4.0 / 3.0, rel=1e-13)
    np.testing.assert_allclose(x, [5.0 / 3.0, 4.0 / 3.0], rtol=1e-13)


def random_saddle(seed, n=60, shift=0.0):
    rng = np.random.default_rng(seed)
    A = laplacian_2d(int(np.sqrt(n))) - shift * sp.identity(n)
    return SaddleSystem(A.tocsr(), rng.standard_normal(n), rng.standard_normal(n), float(rng.standard_normal()))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_saddle_direct_matches_dense(seed):
    sys = random_saddle(seed, n=64, shift=0.5)
    x, y = solve_saddle(sys, 1e-12)
    dense = np.linalg.solve(sys.matrix().toarray(), np.append(sys.rhs_top, sys.rhs_bottom))
    scale = np.abs(dense).max()
    assert np.abs(np.append(x, y) - dense).max() <= 1e-10 * scale


def test_saddle_minres_path_matches_direct(converged_2d):
    from gpe_multigrid.newton import newton_system

    ops, pair = converged_2d
    sys = newton_system(pair, ops)
    xd, yd = solve_saddle(sys, 1e-11, direct_max_dofs=10**6)
    xi, yi = solve_saddle(sys, 1e-11, direct_max_dofs=0)
    assert sys.relative_residual(xi, yi) <= 1e-11
    assert yi == pytest.approx(yd, rel=1e-8)
    np.testing.assert_allclose(xi, xd, atol=1e-8 * np.abs(xd).max())


def test_saddle_constraint_row_satisfied(converged_2d):
    from gpe_multigrid.newton import newton_system

    ops, pair = converged_2d
    sys = newton_system(pair, ops)
    x, _ = solve_saddle(sys, 1e-10)
    assert abs(sys.c @ x - sys.rhs_bottom) <= 1e-10 * abs(sys.rhs_bottom)


def test_saddle_singular_reports_error():
    A = sp.csr_matrix((3, 3))
    sys = SaddleSystem(A, np.array([1.0, 0.0, 0.0]), np.ones(3), 1.0)
    with pytest.raises(SolverError):
        solve_saddle(sys, 1e-10)


def test_saddle_deterministic(converged_2d):
    from gpe_multigrid.newton import newton_system

    ops, pair = converged_2d
    a = solve_saddle(newton_system(pair, ops), 1e-10, direct_max_dofs=0)
    b = solve_saddle(newton_system(pair, ops), 1e-10, direct_max_dofs=0)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]


def test_level_tolerance():
    cfg = SolverConfig()
    assert cfg.level_tolerance(0.5) == 1e-10
    assert SolverConfig(tol_base=1.0, c_tol=1e-2).level_tolerance(0.1) == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        SolverConfig(direct_max_dofs=-1)
