"""Multigrid Newton solver for the ground state of the Gross-Pitaevskii equation."""
from .assembly import LevelOperators, Potential, ProblemParams
from .coarse import EigenPair, ScfConfig, scf_step, solve_coarse
from .driver import MultigridConfig, MultigridRun, run_direct_all_levels, run_multigrid
from .linalg import SaddleSystem, SolverConfig, solve_saddle, solve_spd
from .mesh import BoxDomain, NodalFunction, SimplexMesh, build_hierarchy, build_initial_mesh, prolongate, refine_regular
from .newton import newton_iteration, newton_residual

__all__ = [
    "BoxDomain",
    "EigenPair",
    "LevelOperators",
    "MultigridConfig",
    "MultigridRun",
    "NodalFunction",
    "Potential",
    "ProblemParams",
    "SaddleSystem",
    "ScfConfig",
    "SimplexMesh",
    "SolverConfig",
    "build_hierarchy",
    "build_initial_mesh",
    "newton_iteration",
    "newton_residual",
    "prolongate",
    "refine_regular",
    "run_direct_all_levels",
    "run_multigrid",
    "scf_step",
    "solve_coarse",
    "solve_saddle",
    "solve_spd",
]
