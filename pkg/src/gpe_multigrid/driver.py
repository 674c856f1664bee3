"""Multigrid ground-state solver: SCF on the coarsest level, then one Newton
correction per refinement, plus the level-by-level direct reference."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .assembly import LevelOperators, ProblemParams
from .coarse import EigenPair, ScfConfig, ScfError, ScfTrace, solve_coarse
from .linalg import SolverConfig
from .mesh import LevelHierarchy, build_initial_mesh, prolongate, refine_regular
from .newton import NewtonError, NewtonStepReport, newton_iteration, newton_residual

log = logging.getLogger(__name__)


class RunError(RuntimeError):
    def __init__(self, level: int, cause: Exception):
        super().__init__(f"level {level}: {cause}")
        self.level = level
        self.cause = cause


@dataclass(frozen=True)
class MultigridConfig:
    scf: ScfConfig | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def scf_for(self, params: ProblemParams) -> ScfConfig:
        return self.scf or ScfConfig.for_zeta(params.zeta)


@dataclass(eq=False)
class LevelResult:
    level: int
    pair: EigenPair
    elements: int
    dofs: int
    h: float
    seconds: float
    residual: float
    norm_drift: float
    newton: NewtonStepReport | None = None
    scf_trace: ScfTrace | None = None


@dataclass(eq=False)
class MultigridRun:
    params: ProblemParams
    hierarchy: LevelHierarchy
    operators: list[LevelOperators]
    levels: list[LevelResult]
    method: str = "multigrid"

    @property
    def final(self) -> LevelResult:
        return self.levels[-1]

    @property
    def total_seconds(self) -> float:
        return sum(r.seconds for r in self.levels)

    CSV_HEADER = "level,elements,dofs,lambda,residual,norm_drift,seconds"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.levels:
            lines.append(
                f"{r.level},{r.elements},{r.dofs},{r.pair.lam:.16e},{r.residual:.6e},"
                f"{r.norm_drift:.6e},{r.seconds:.6f}"
            )
        return "\n".join(lines) + "\n"


def _level_result(ops: LevelOperators, pair: EigenPair, seconds: float, **extra) -> LevelResult:
    return LevelResult(
        level=ops.level,
        pair=pair,
        elements=ops.mesh.n_cells,
        dofs=ops.n_dofs,
        h=ops.mesh.h_max,
        seconds=seconds,
        residual=newton_residual(pair, ops),
        norm_drift=abs(ops.mass_norm(ops.reduce(pair.u)) - 1.0),
        **extra,
    )


def _coarse_level(params, cells_per_axis, cfg):
    t0 = time.perf_counter()
    mesh = build_initial_mesh(params.domain, cells_per_axis)
    ops = LevelOperators(mesh, params)
    trace = ScfTrace()
    try:
        pair = solve_coarse(ops, cfg.scf_for(params), trace=trace, direct_max_dofs=cfg.solver.direct_max_dofs)
    except ScfError as exc:
        raise RunError(1, exc) from exc
    seconds = time.perf_counter() - t0
    return LevelHierarchy([mesh]), ops, _level_result(ops, pair, seconds, scf_trace=trace)


def run_multigrid(
    params: ProblemParams,
    cells_per_axis: int,
    n_levels: int,
    cfg: MultigridConfig | None = None,
) -> MultigridRun:
    cfg = cfg or MultigridConfig()
    if n_levels < 1:
        raise ValueError("n_levels must be at least 1")
    hierarchy, ops, first = _coarse_level(params, cells_per_axis, cfg)
    operators, results = [ops], [first]
    log.info("level 1: %d elements, lambda=%.10f", first.elements, first.pair.lam)
    pair = first.pair
    for k in range(1, n_levels):
        t0 = time.perf_counter()
        mesh, prolong = refine_regular(hierarchy.meshes[-1])
        hierarchy.meshes.append(mesh)
        hierarchy.prolongations.append(prolong)
        ops = LevelOperators(mesh, params)
        tol = cfg.solver.level_tolerance(mesh.h_max)
        try:
            pair, report = newton_iteration(pair, ops, tol, prolong, cfg.solver.direct_max_dofs)
        except NewtonError as exc:
            raise RunError(k + 1, exc) from exc
        seconds = time.perf_counter() - t0
        operators.append(ops)
        results.append(_level_result(ops, pair, seconds, newton=report))
        log.info("level %d: %d elements, lambda=%.10f, %.3fs", k + 1, mesh.n_cells, pair.lam, seconds)
    return MultigridRun(params, hierarchy, operators, results)


def run_direct_all_levels(
    params: ProblemParams,
    cells_per_axis: int,
    n_levels: int,
    cfg: MultigridConfig | None = None,
    residual_tol: float | None = None,
) -> MultigridRun:
    """Full SCF solve on every level, warm-started from the previous level."""
    cfg = cfg or MultigridConfig()
    scf = cfg.scf_for(params)
    if residual_tol is not None:
        scf = ScfConfig(scf.damping, residual_tol, scf.max_iters)
        cfg = MultigridConfig(scf, cfg.solver)
    hierarchy, ops, first = _coarse_level(params, cells_per_axis, cfg)
    operators, results = [ops], [first]
    pair = first.pair
    for k in range(1, n_levels):
        t0 = time.perf_counter()
        mesh, prolong = refine_regular(hierarchy.meshes[-1])
        hierarchy.meshes.append(mesh)
        hierarchy.prolongations.append(prolong)
        ops = LevelOperators(mesh, params)
        trace = ScfTrace()
        try:
            pair = solve_coarse(ops, scf, prolongate(prolong, pair.u), trace, cfg.solver.direct_max_dofs)
        except ScfError as exc:
            raise RunError(k + 1, exc) from exc
        seconds = time.perf_counter() - t0
        operators.append(ops)
        results.append(_level_result(ops, pair, seconds, scf_trace=trace))
    return MultigridRun(params, hierarchy, operators, results, method="direct")


def reference_solution(run: MultigridRun, cfg: MultigridConfig | None = None, residual_tol: float = 1e-11):
    """Direct SCF solve one level finer than ``run``'s finest level.

    Returns ``(pair, operators, prolongation)`` with the prolongation from the
    run's finest level to the reference level.
    """
    cfg = cfg or MultigridConfig()
    scf = cfg.scf_for(run.params)
    scf = ScfConfig(scf.damping, residual_tol, scf.max_iters)
    mesh, prolong = refine_regular(run.hierarchy.meshes[-1])
    ops = LevelOperators(mesh, run.params)
    start = prolongate(prolong, run.final.pair.u)
    pair = solve_coarse(ops, scf, start, direct_max_dofs=cfg.solver.direct_max_dofs)
    return pair, ops, prolong
