"""Energies, error norms and observed convergence orders."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .assembly import LevelOperators
from .coarse import EigenPair
from .driver import MultigridRun
from .mesh import REFINEMENT_INDEX, NodalFunction, Prolongation
from .quadrature import collapsed_gauss_rule


def energy(u: NodalFunction, ops: LevelOperators) -> float:
    """Gross-Pitaevskii energy ``int 1/2|grad u|^2 + 1/2 W u^2 + 1/4 zeta u^4``."""
    if u.level != ops.level:
        raise ValueError(f"function on level {u.level} evaluated on level {ops.level}")
    return ops.energy(ops.reduce(u))


def lambda_energy_gap(pair: EigenPair, ops: LevelOperators) -> float:
    """``lam - (2 E(u) + zeta/2 int u^4)``; zero at a normalized discrete solution."""
    x = ops.reduce(pair.u)
    return pair.lam - (2.0 * ops.energy(x) + 0.5 * ops.params.zeta * ops.quartic_integral(x))


def observed_order(e_coarse: float, e_fine: float, beta: int = REFINEMENT_INDEX) -> float | None:
    if not (e_coarse > 0 and e_fine > 0):
        return None
    return math.log(e_coarse / e_fine) / math.log(beta)


@dataclass
class ErrorRecord:
    level: int
    dofs: int
    elements: int
    err_lambda: float
    err_h1: float
    err_l2: float
    order_lambda: float | None = None
    order_h1: float | None = None
    order_l2: float | None = None


def _fill_orders(records: list[ErrorRecord]) -> list[ErrorRecord]:
    for prev, cur in zip(records, records[1:]):
        cur.order_lambda = observed_order(prev.err_lambda, cur.err_lambda)
        cur.order_h1 = observed_order(prev.err_h1, cur.err_h1)
        cur.order_l2 = observed_order(prev.err_l2, cur.err_l2)
    return records


def _norms(ops: LevelOperators, e: np.ndarray) -> tuple[float, float]:
    return math.sqrt(max(e @ (ops.K @ e), 0.0)), math.sqrt(max(e @ (ops.M @ e), 0.0))


def error_vs_reference(
    run: MultigridRun,
    ref: EigenPair,
    ref_ops: LevelOperators,
    to_ref: Prolongation | None = None,
) -> list[ErrorRecord]:
    """Errors of every level of ``run`` measured on the reference mesh.

    Each level's solution is prolongated exactly through the nested spaces;
    ``to_ref`` carries the run's finest level to the reference level when
    the reference lives on a finer level.  H1 errors are seminorms.
    """
    finest = run.final.level
    if to_ref is not None and to_ref.coarse_level != finest:
        raise ValueError(f"prolongation starts on level {to_ref.coarse_level}, run ends on level {finest}")
    expected = finest if to_ref is None else to_ref.fine_level
    if ref.level != expected or ref_ops.level != expected:
        raise ValueError(f"reference on level {ref.level} does not match level {expected}")
    x_ref = ref_ops.reduce(ref.u)
    records = []
    for r in run.levels:
        values = run.hierarchy.prolongate_to(r.pair.u.values, r.level, finest)
        if to_ref is not None:
            values = to_ref.matrix @ values
        e = ref_ops.reduce(values) - x_ref
        h1, l2 = _norms(ref_ops, e)
        records.append(ErrorRecord(r.level, r.dofs, r.elements, abs(r.pair.lam - ref.lam), h1, l2))
    return _fill_orders(records)


def error_vs_exact(
    pairs: Sequence[EigenPair],
    operators: Sequence[LevelOperators],
    u_exact: Callable[[np.ndarray], np.ndarray],
    grad_exact: Callable[[np.ndarray], np.ndarray],
    lam_exact: float,
    degree: int = 10,
) -> list[ErrorRecord]:
    """Errors against a known solution, integrated with a high-order rule."""
    records = []
    for pair, ops in zip(pairs, operators):
        mesh = ops.mesh
        rule = collapsed_gauss_rule(mesh.dim, degree)
        pts = rule.map_points(mesh.vertices[mesh.cells])
        uh = pair.u.values[mesh.cells] @ rule.barycentric.T
        gh = np.einsum("ei,eid->ed", pair.u.values[mesh.cells], ops.data.grads)
        w = ops.data.volumes[:, None] * rule.weights
        l2 = math.sqrt(np.sum(w * (uh - u_exact(pts)) ** 2))
        h1 = math.sqrt(np.sum(w * np.sum((gh[:, None, :] - grad_exact(pts)) ** 2, axis=-1)))
        records.append(ErrorRecord(ops.level, ops.n_dofs, mesh.n_cells, abs(pair.lam - lam_exact), h1, l2))
    return _fill_orders(records)


@dataclass
class GapRecord:
    level: int
    elements: int
    dofs: int
    lambda_multigrid: float
    lambda_direct: float
    lambda_gap: float
    h1_gap: float
    l2_gap: float


def compare_runs(mg: MultigridRun, direct: MultigridRun) -> list[GapRecord]:
    """Level-wise distance between the multigrid iterates and direct solutions."""
    out = []
    for a, b, ops in zip(mg.levels, direct.levels, mg.operators):
        if a.elements != b.elements:
            raise ValueError(f"runs disagree on level {a.level} meshes")
        h1, l2 = _norms(ops, ops.reduce(a.pair.u) - ops.reduce(b.pair.u))
        out.append(GapRecord(a.level, a.elements, a.dofs, a.pair.lam, b.pair.lam, abs(a.pair.lam - b.pair.lam), h1, l2))
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10e}"
    return str(v)


ERRORS_HEADER = "level,err_lambda,err_h1,err_l2,order_lambda,order_h1,order_l2"
COMPARE_HEADER = "level,elements,dofs,lambda_multigrid,lambda_direct,lambda_gap,h1_gap,l2_gap"


def errors_csv(records: Sequence[ErrorRecord]) -> str:
    rows = [ERRORS_HEADER]
    for r in records:
        vals = [r.level, r.err_lambda, r.err_h1, r.err_l2, r.order_lambda, r.order_h1, r.order_l2]
        rows.append(",".join(_fmt(v) for v in vals))
    return "\n".join(rows) + "\n"


def compare_csv(records: Sequence[GapRecord]) -> str:
    rows = [COMPARE_HEADER]
    for r in records:
        vals = [r.level, r.elements, r.dofs, r.lambda_multigrid, r.lambda_direct, r.lambda_gap, r.h1_gap, r.l2_gap]
        rows.append(",".join(_fmt(v) for v in vals))
    return "\n".join(rows) + "\n"


def write_dat_files(out_dir: Path, run: MultigridRun, errors: Sequence[ErrorRecord] | None = None) -> list[Path]:
    """Gnuplot-ready whitespace tables for log-log error and timing plots."""
    out_dir = Path(out_dir)
    written = []
    cumulative = np.cumsum([r.seconds for r in run.levels])
    lines = ["# level elements dofs seconds cumulative_seconds"]
    for r, c in zip(run.levels, cumulative):
        lines.append(f"{r.level} {r.elements} {r.dofs} {r.seconds:.6e} {c:.6e}")
    path = out_dir / "time.dat"
    path.write_text("\n".join(lines) + "\n")
    written.append(path)
    if errors:
        lines = ["# level elements dofs err_lambda err_h1 err_l2"]
        for e in errors:
            lines.append(f"{e.level} {e.elements} {e.dofs} {e.err_lambda:.10e} {e.err_h1:.10e} {e.err_l2:.10e}")
        path = out_dir / "errors.dat"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written
