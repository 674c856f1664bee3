"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL verdict with the measured numbers;
the lines are printed together at the end of the pytest run.
"""
import math
import time

import numpy as np
import pytest

from gpe_multigrid.assembly import ProblemParams, assemble_mass, assemble_stiffness
from gpe_multigrid.coarse import ScfTrace, solve_coarse
from gpe_multigrid.diagnostics import compare_runs, error_vs_exact, error_vs_reference, lambda_energy_gap, observed_order
from gpe_multigrid.driver import reference_solution, run_direct_all_levels, run_multigrid
from gpe_multigrid.mesh import BoxDomain, build_hierarchy
from gpe_multigrid.newton import newton_iteration, newton_residual, newton_system

from conftest import ACCEPTANCE_LINES, sine_mode, small_problem
from test_newton import contraction_constants

LAMBDA_BRACKET = (1.75, 2.25)
H1_BRACKET = (0.85, 1.15)
L2_BRACKET = (1.75, 2.25)


def record(number, title, ok, details):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {details}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def inside(v, bracket):
    return v is not None and bracket[0] <= v <= bracket[1]


def order_check(errors):
    """All consecutive-level orders inside their brackets; returns (ok, text)."""
    ok = True
    parts = []
    for e in errors[1:]:
        good = inside(e.order_lambda, LAMBDA_BRACKET) and inside(e.order_h1, H1_BRACKET) and inside(e.order_l2, L2_BRACKET)
        ok &= good
        parts.append(f"L{e.level} lam={e.order_lambda:.3f} h1={e.order_h1:.3f} l2={e.order_l2:.3f}")
    return ok, "; ".join(parts)


@pytest.fixture(scope="module")
def example1():
    params = ProblemParams.example1()
    t0 = time.perf_counter()
    mg = run_multigrid(params, 4, 3)
    direct = run_direct_all_levels(params, 4, 3)
    ref, ref_ops, to_ref = reference_solution(direct)
    return dict(
        mg=mg,
        direct=direct,
        ref=ref,
        ref_ops=ref_ops,
        errors=error_vs_reference(mg, ref, ref_ops, to_ref),
        direct_errors=error_vs_reference(direct, ref, ref_ops, to_ref),
        to_ref=to_ref,
        seconds=time.perf_counter() - t0,
    )


def test_criterion_1_element_counts():
    t0 = time.perf_counter()
    full = build_hierarchy(BoxDomain.unit(3), 8, 5)
    counts = [m.n_cells for m in full.meshes]
    desk = [m.n_cells for m in build_hierarchy(BoxDomain.unit(3), 4, 4).meshes]
    ok = counts == [3072, 24576, 196608, 1572864, 12582912]
    ok &= all(b == 8 * a for a, b in zip(desk, desk[1:]))
    record(1, "element counts", ok, f"cells 8: {counts}; cells 4: {desk}; {time.perf_counter() - t0:.1f}s")


@pytest.mark.parametrize("dim,cells,n_levels", [(1, 4, 5), (2, 4, 4)])
def test_criterion_2_linear_sanity(dim, cells, n_levels):
    t0 = time.perf_counter()
    run = run_multigrid(ProblemParams(BoxDomain.unit(dim), 0.0), cells, n_levels)
    u, g = sine_mode(dim)
    exact = dim * math.pi**2
    errors = error_vs_exact([r.pair for r in run.levels], run.operators, u, g, exact)
    lams = [r.pair.lam for r in run.levels]
    from_above = all(l > exact for l in lams) and all(b < a for a, b in zip(lams, lams[1:]))
    ok, text = order_check(errors)
    seconds = time.perf_counter() - t0
    record(2, f"linear sanity {dim}D", ok and from_above and seconds < 60,
           f"lambda from above={from_above}; {text}; {seconds:.1f}s")


def test_criterion_3_example1_orders(example1):
    ok, text = order_check(example1["errors"])
    seconds = example1["seconds"]
    record(3, "Example 1 orders vs one-level-finer reference", ok and seconds < 600, f"{text}; {seconds:.1f}s")


def test_criterion_4_scheme_vs_direct_gap(example1):
    gaps = compare_runs(example1["mg"], example1["direct"])
    disc = example1["direct_errors"]
    ok = True
    parts = []
    for gap, d in zip(gaps[1:], disc[1:]):
        ok &= gap.h1_gap <= 0.5 * d.err_h1
        parts.append(f"L{gap.level} gap={gap.h1_gap:.3e} vs 0.5*disc={0.5 * d.err_h1:.3e}")
    record(4, "multigrid vs direct gap", ok, "; ".join(parts))


def test_criterion_5_newton_fixed_point_and_contraction():
    t0 = time.perf_counter()
    tol = 1e-10
    ops = small_problem(3, 4, zeta=1.0, gammas=(1.0, 1.0, 1.0))
    pair = solve_coarse(ops)
    new, _ = newton_iteration(pair, ops, tol)
    fixed_res = newton_residual(new, ops)
    ok_a = fixed_res <= 10 * tol and abs(new.lam - pair.lam) <= 1e-9 * pair.lam
    res, consts = contraction_constants(16)
    ok_b = len(consts) >= 2 and max(consts) / min(consts) <= 10.0
    record(5, "Newton fixed point and quadratic contraction", ok_a and ok_b,
           f"(a) residual {fixed_res:.2e} <= {10 * tol:.0e}; (b) residuals "
           + ", ".join(f"{r:.2e}" for r in res) + " constants " + ", ".join(f"{c:.3g}" for c in consts)
           + f"; {time.perf_counter() - t0:.1f}s")


def test_criterion_6_linear_complexity():
    run = run_multigrid(ProblemParams.example1(), 4, 4)
    t = [r.seconds for r in run.levels]
    per_dof = [r.seconds / r.dofs for r in run.levels]
    ok_total = run.total_seconds <= 2.5 * t[-1]
    ok_dof = per_dof[-1] <= 3.0 * per_dof[-2]
    record(6, "work scaling", ok_total and ok_dof,
           "level seconds " + ", ".join(f"{s:.3f}" for s in t)
           + f"; total/finest={run.total_seconds / t[-1]:.2f} (<=2.5); per-dof ratio={per_dof[-1] / per_dof[-2]:.2f} (<=3)")


def test_criterion_7_structural_invariants(example1):
    mg, direct = example1["mg"], example1["direct"]
    parts = []

    # Galerkin nestedness on the full-vertex matrices
    worst = 0.0
    for k in (1, 2):
        p = mg.hierarchy.prolongation(k).matrix
        for assemble in (assemble_stiffness, assemble_mass):
            ac, af = assemble(mg.hierarchy[k]), assemble(mg.hierarchy[k + 1])
            worst = max(worst, abs(p.T @ af @ p - ac).max() / abs(ac).max())
    ok_nested = worst <= 1e-11
    parts.append(f"nestedness {worst:.1e}")

    sym = True
    for ops, r in zip(mg.operators, mg.levels):
        x = ops.reduce(r.pair.u)
        for A in (ops.K, ops.M, ops.MW, ops.density_mass(x, 3.0), newton_system(r.pair, ops).matrix()):
            sym &= (A != A.T).nnz == 0
    parts.append(f"symmetric={sym}")

    drift = [r.norm_drift for r in mg.levels[1:]]
    orders = [observed_order(a, b) for a, b in zip(drift, drift[1:])]
    ok_drift = all(b < a for a, b in zip(drift, drift[1:])) and all(inside(o, LAMBDA_BRACKET) for o in orders)
    parts.append("drift " + ", ".join(f"{d:.2e}" for d in drift) + " orders " + ", ".join(f"{o:.2f}" for o in orders))

    tol = 1e-10
    gaps = [r.newton.constraint_gap for r in mg.levels[1:]]
    ok_gap = all(g <= 10 * tol for g in gaps)
    parts.append("constraint gaps " + ", ".join(f"{g:.1e}" for g in gaps))

    converged = [(r.pair, ops) for r, ops in zip(direct.levels, direct.operators)]
    converged.append((example1["ref"], example1["ref_ops"]))
    ids = [abs(lambda_energy_gap(p, o)) for p, o in converged]
    ok_id = max(ids) <= 1e-9
    parts.append(f"lambda-energy identity max {max(ids):.1e}")

    record(7, "structural invariants", ok_nested and sym and ok_drift and ok_gap and ok_id, "; ".join(parts))


def test_criterion_8_example2_robustness():
    t0 = time.perf_counter()
    ex2 = run_multigrid(ProblemParams.example2(), 8, 3)
    ex1 = run_multigrid(ProblemParams.example1(), 8, 3)
    energies = np.array([rec.energy for rec in ex2.levels[0].scf_trace.records])
    tail = np.diff(energies[len(energies) // 2 :])
    ok_energy = bool(np.all(tail <= 1e-12))
    ok_lam = all(a.pair.lam > b.pair.lam for a, b in zip(ex2.levels, ex1.levels))
    seconds = time.perf_counter() - t0
    record(8, "Example 2 robustness", ok_lam and ok_energy and seconds < 900,
           "lambda ex2 " + ", ".join(f"{r.pair.lam:.4f}" for r in ex2.levels)
           + " vs ex1 " + ", ".join(f"{r.pair.lam:.4f}" for r in ex1.levels)
           + f"; SCF {len(energies) - 1} steps, max final-half rise {tail.max():.1e}; {seconds:.1f}s")
