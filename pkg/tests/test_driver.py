import numpy as np
import pytest

from gpe_multigrid.assembly import ProblemParams, Potential
from gpe_multigrid.coarse import ScfConfig, solve_coarse
from gpe_multigrid.driver import MultigridConfig, RunError, run_direct_all_levels, run_multigrid
from gpe_multigrid.mesh import BoxDomain

from conftest import small_problem

PARAMS_2D = ProblemParams(BoxDomain.unit(2), 1.0, Potential((1.0, 1.0)))


@pytest.fixture(scope="module")
def run_2d():
    return run_multigrid(PARAMS_2D, 4, 4)


def test_single_level_equals_coarse_solve():
    run = run_multigrid(PARAMS_2D, 4, 1)
    ops = small_problem(2, 4, zeta=1.0, gammas=(1.0, 1.0))
    pair = solve_coarse(ops)
    assert run.final.pair.lam == pair.lam
    np.testing.assert_array_equal(run.final.pair.u.values, pair.u.values)
    assert run.final.scf_trace is not None and run.final.newton is None


def test_levels_counts_and_reports(run_2d):
    assert [r.level for r in run_2d.levels] == [1, 2, 3, 4]
    assert [r.elements for r in run_2d.levels] == [32, 128, 512, 2048]
    assert [r.dofs for r in run_2d.levels] == [9, 49, 225, 961]
    for r in run_2d.levels[1:]:
        assert r.newton.level == r.level
        assert r.newton.constraint_gap <= 1e-9
    assert all(r.seconds > 0 for r in run_2d.levels)
    assert run_2d.total_seconds == pytest.approx(sum(r.seconds for r in run_2d.levels))


def test_residual_and_drift_decrease(run_2d):
    res = [r.residual for r in run_2d.levels[1:]]
    drift = [r.norm_drift for r in run_2d.levels[1:]]
    assert all(b < a for a, b in zip(res, res[1:]))
    assert all(b < a for a, b in zip(drift, drift[1:]))


def test_multigrid_close_to_direct(run_2d):
    direct = run_direct_all_levels(PARAMS_2D, 4, 4)
    assert direct.levels[0].pair.lam == run_2d.levels[0].pair.lam
    for a, b in zip(run_2d.levels[1:], direct.levels[1:]):
        assert abs(a.pair.lam - b.pair.lam) < 0.05 * b.pair.lam
        assert b.residual <= 1e-9
    assert direct.method == "direct"


def test_deterministic_bitwise():
    a = run_multigrid(PARAMS_2D, 4, 3)
    b = run_multigrid(PARAMS_2D, 4, 3)
    assert [r.pair.lam for r in a.levels] == [r.pair.lam for r in b.levels]
    np.testing.assert_array_equal(a.final.pair.u.values, b.final.pair.u.values)


def test_iterative_and_direct_solver_paths_agree():
    a = run_multigrid(PARAMS_2D, 4, 3, MultigridConfig())
    from gpe_multigrid.linalg import SolverConfig

    b = run_multigrid(PARAMS_2D, 4, 3, MultigridConfig(solver=SolverConfig(direct_max_dofs=0)))
    for x, y in zip(a.levels, b.levels):
        assert x.pair.lam == pytest.approx(y.pair.lam, rel=1e-8)


def test_csv_layout(run_2d):
    lines = run_2d.to_csv().splitlines()
    assert lines[0] == "level,elements,dofs,lambda,residual,norm_drift,seconds"
    assert len(lines) == 5
    assert lines[2].split(",")[:3] == ["2", "128", "49"]


def test_scf_failure_wrapped_with_level():
    cfg = MultigridConfig(scf=ScfConfig(damping=0.05, max_iters=1))
    with pytest.raises(RunError) as info:
        run_multigrid(PARAMS_2D, 4, 2, cfg)
    assert info.value.level == 1


def test_invalid_levels():
    with pytest.raises(ValueError):
        run_multigrid(PARAMS_2D, 4, 0)


def test_norm_drift_bounded_by_h_squared(run_2d):
    """Drift stays below C h^2; it actually decays like h^4, being the
    squared mass norm of the Newton step."""
    scaled = [r.norm_drift / r.h**2 for r in run_2d.levels[1:]]
    assert all(b < a for a, b in zip(scaled, scaled[1:]))
    drift = [r.norm_drift for r in run_2d.levels[1:]]
    orders = [np.log2(a / b) for a, b in zip(drift, drift[1:])]
    assert all(3.5 <= o <= 4.5 for o in orders)
