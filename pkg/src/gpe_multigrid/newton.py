"""One Newton step for the eigenpair, posed on the next finer level.

The pair ``(lam, u)`` is treated as a single unknown.  Linearizing the
residual operator around ``(lam', u')`` gives the bordered system

    (a'(u'; ., .) - lam' M) u'' - lam'' M u' = 2 zeta (u'^3, .) - lam' M u'
                           -(u', u'')_M    = -1/2 - (u', u')_M / 2

whose solution ``(lam'', u'')`` is returned as is (no renormalization).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .assembly import LevelOperators
from .coarse import EigenPair
from .linalg import DEFAULT_DIRECT_MAX_DOFS, SaddleSystem, SolverError, solve_saddle
from .mesh import Prolongation, prolongate


class NewtonError(RuntimeError):
    pass


@dataclass
class NewtonStepReport:
    level: int
    solver_residual: float
    constraint_gap: float
    lambda_before: float
    lambda_after: float
    norm_after: float

    CSV_HEADER = "level,solver_residual,constraint_gap,lambda_before,lambda_after,norm_after"

    def to_csv_row(self) -> str:
        d = asdict(self)
        return (
            f"{d['level']},{d['solver_residual']:.6e},{d['constraint_gap']:.6e},"
            f"{d['lambda_before']:.16e},{d['lambda_after']:.16e},{d['norm_after']:.16e}"
        )


def newton_system(prev: EigenPair, ops: LevelOperators) -> SaddleSystem:
    """Bordered Newton system at ``prev`` (already living on ``ops``' level)."""
    zeta = ops.params.zeta
    x = ops.reduce(prev.u)
    Mx = ops.M @ x
    a_plus = ops.H0 + ops.density_mass(x, 3.0 * zeta) if zeta else ops.H0
    A = (a_plus - prev.lam * ops.M).tocsr()
    rhs_top = -prev.lam * Mx
    if zeta:
        rhs_top = rhs_top + ops.cubic(x, zeta)
    return SaddleSystem(
        A=A,
        c=-Mx,
        rhs_top=rhs_top,
        rhs_bottom=-0.5 - 0.5 * float(x @ Mx),
        preconditioner_matrix=a_plus.tocsr(),
    )


def newton_iteration(
    prev: EigenPair,
    ops: LevelOperators,
    tol: float,
    prolongation: Prolongation | None = None,
    direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS,
) -> tuple[EigenPair, NewtonStepReport]:
    """Correct ``prev`` on the level of ``ops`` with a single linear solve.

    ``prev`` may live on the next coarser level, in which case
    ``prolongation`` carries it to the level of ``ops`` first.
    """
    if prev.level != ops.level:
        if prolongation is None or prolongation.fine_level != ops.level:
            raise NewtonError(f"pair on level {prev.level} needs a prolongation to level {ops.level}")
        prev = EigenPair(prev.lam, prolongate(prolongation, prev.u))
    system = newton_system(prev, ops)
    try:
        x_new, lam_new = solve_saddle(system, tol, direct_max_dofs)
    except SolverError as exc:
        raise NewtonError(f"Newton solve on level {ops.level} failed: {exc}") from exc

    x_old = ops.reduce(prev.u)
    Mx_old = ops.M @ x_old
    gap = abs(float(x_new @ Mx_old) - 0.5 - 0.5 * float(x_old @ Mx_old))
    if gap > 10 * tol:
        raise NewtonError(
            f"constraint gap {gap:.3e} on level {ops.level} exceeds {10 * tol:.1e}; "
            "the previous level is too coarse for the Newton correction"
        )
    report = NewtonStepReport(
        level=ops.level,
        solver_residual=system.relative_residual(x_new, lam_new),
        constraint_gap=gap,
        lambda_before=prev.lam,
        lambda_after=lam_new,
        norm_after=ops.mass_norm(x_new),
    )
    return EigenPair(lam_new, ops.expand(x_new)), report


def residual_parts(pair: EigenPair, ops: LevelOperators) -> tuple[np.ndarray, float]:
    x = ops.reduce(pair.u)
    r = ops.apply_nonlinear(x) - pair.lam * (ops.M @ x)
    s = 0.5 * (1.0 - float(x @ (ops.M @ x)))
    return r, s


def newton_residual(pair: EigenPair, ops: LevelOperators) -> float:
    """Euclidean norm of the discrete residual operator ``(r, s)`` at ``pair``."""
    if pair.level != ops.level:
        raise NewtonError(f"pair on level {pair.level} evaluated on level {ops.level}")
    r, s = residual_parts(pair, ops)
    return float(np.sqrt(r @ r + s * s))
