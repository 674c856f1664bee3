"""Sparse solvers: SPD systems and the bordered Newton saddle system."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

# Sparse LU fill grows superlinearly for 3D meshes; beyond this size the
# iterative path is faster and keeps per-level work linear.
DEFAULT_DIRECT_MAX_DOFS = 20_000


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS
    tol_base: float = 1e-10
    c_tol: float = 1e-2

    def __post_init__(self):
        if self.direct_max_dofs < 0:
            raise ValueError("direct_max_dofs must be non-negative")
        if not (self.tol_base > 0 and self.c_tol > 0):
            raise ValueError("solver tolerances must be positive")

    def level_tolerance(self, h: float) -> float:
        return min(self.tol_base, self.c_tol * h * h)


def _relative(r: np.ndarray, b: np.ndarray) -> float:
    nb = np.linalg.norm(b)
    nr = np.linalg.norm(r)
    return nr / nb if nb > 0 else nr


def amg_preconditioner(A: sp.spmatrix) -> spla.LinearOperator:
    # 'local' weighting avoids pyamg's randomized spectral radius estimate,
    # keeping the hierarchy (and every solve) bitwise reproducible
    ml = pyamg.smoothed_aggregation_solver(
        sp.csr_matrix(A),
        smooth=("jacobi", {"omega": 4.0 / 3.0, "weighting": "local"}),
        presmoother=("gauss_seidel", {"sweep": "symmetric"}),
        postsmoother=("gauss_seidel", {"sweep": "symmetric"}),
    )
    return ml.aspreconditioner(cycle="V")


def pcg(A, b: np.ndarray, prec, tol: float, x0: np.ndarray | None = None, maxiter: int | None = None) -> np.ndarray:
    """Preconditioned conjugate gradients; raises on indefiniteness or stagnation."""
    n = b.size
    maxiter = maxiter or 10 * n
    x = np.zeros(n) if x0 is None else x0.copy()
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros(n)
    r = b - A @ x
    z = prec @ r
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        if np.linalg.norm(r) <= tol * nb:
            # the recursive residual drifts from the true one; confirm
            r = b - A @ x
            if np.linalg.norm(r) <= tol * nb:
                return x
            z = prec @ r
            p = z.copy()
            rz = r @ z
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError("matrix is not positive definite (CG curvature <= 0)", np.linalg.norm(r) / nb)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = prec @ r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = np.linalg.norm(b - A @ x) / nb
    if res <= tol:
        return x
    raise SolverError(f"CG did not converge in {maxiter} iterations", res)


class SpdSolver:
    """Reusable solver for one SPD matrix.

    Small systems are factorized once (symmetric-mode LU, whose diagonal
    pivots expose indefiniteness); larger ones use AMG-preconditioned CG.
    """

    def __init__(self, A: sp.spmatrix, tol: float = 1e-12, direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.A = sp.csr_matrix(A)
        self.tol = tol
        self.direct = self.A.shape[0] <= direct_max_dofs
        if self.direct:
            try:
                self._lu = spla.splu(
                    self.A.tocsc(),
                    permc_spec="MMD_AT_PLUS_A",
                    diag_pivot_thresh=0.0,
                    options=dict(SymmetricMode=True),
                )
            except RuntimeError as exc:
                raise SolverError(f"factorization failed: {exc}") from exc
            if np.any(self._lu.U.diagonal() <= 0):
                raise SolverError("matrix is not positive definite (non-positive pivot)")
        else:
            self._prec = amg_preconditioner(self.A)

    def solve(self, b: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if not np.any(b):
            return np.zeros_like(b)
        if self.direct:
            x = self._lu.solve(b)
            res = _relative(b - self.A @ x, b)
            if res > self.tol:
                # one step of iterative refinement
                x += self._lu.solve(b - self.A @ x)
                res = _relative(b - self.A @ x, b)
        else:
            x = pcg(self.A, b, self._prec, self.tol, x0=x0)
            res = _relative(b - self.A @ x, b)
        if res > self.tol:
            raise SolverError(f"SPD solve stalled at relative residual {res:.3e}", res)
        return x


def solve_spd(A: sp.spmatrix, b: np.ndarray, tol: float = 1e-12, direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS) -> np.ndarray:
    return SpdSolver(A, tol, direct_max_dofs).solve(b)


@dataclass(eq=False)
class SaddleSystem:
    """``[[A, c], [c^T, 0]] [x; y] = [rhs_top; rhs_bottom]``.

    ``preconditioner_matrix`` is an SPD stand-in for ``A`` used by the
    iterative path; it defaults to ``A`` itself.
    """

    A: sp.spmatrix
    c: np.ndarray
    rhs_top: np.ndarray
    rhs_bottom: float
    preconditioner_matrix: sp.spmatrix | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def matrix(self) -> sp.csc_matrix:
        c = sp.csc_matrix(self.c.reshape(-1, 1))
        return sp.bmat([[self.A, c], [c.T, None]], format="csc")

    def residual(self, x: np.ndarray, y: float) -> tuple[np.ndarray, float]:
        return self.rhs_top - self.A @ x - y * self.c, self.rhs_bottom - self.c @ x

    def relative_residual(self, x: np.ndarray, y: float) -> float:
        """Block-wise relative residual: the worse of the two rows."""
        r_top, r_bot = self.residual(x, y)
        top = _relative(r_top, self.rhs_top)
        bottom = abs(r_bot) / abs(self.rhs_bottom) if self.rhs_bottom else abs(r_bot)
        return max(top, bottom)


def _solve_saddle_direct(sys: SaddleSystem, tol: float):
    K = sys.matrix()
    f = np.append(sys.rhs_top, sys.rhs_bottom)
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SolverError(
            f"saddle factorization failed ({exc}); the initial guess is probably too far "
            "from the ground state, try a finer coarse mesh or a tighter coarse tolerance"
        ) from exc
    z = lu.solve(f)
    for _ in range(3):
        if sys.relative_residual(z[:-1], z[-1]) <= tol:
            break
        z += lu.solve(f - K @ z)
    return z[:-1], float(z[-1])


def _solve_saddle_minres(sys: SaddleSystem, tol: float):
    n = sys.n
    P = sys.preconditioner_matrix if sys.preconditioner_matrix is not None else sys.A
    B = amg_preconditioner(P)
    Bc = B @ sys.c
    schur = float(sys.c @ Bc)
    if not schur > 0:
        raise SolverError("constraint column is invisible to the preconditioner")

    def apply_prec(v):
        out = np.empty_like(v)
        out[:n] = B @ v[:n]
        out[n] = v[n] / schur
        return out

    def apply_op(v):
        out = np.empty_like(v)
        out[:n] = sys.A @ v[:n] + v[n] * sys.c
        out[n] = sys.c @ v[:n]
        return out

    op = spla.LinearOperator((n + 1, n + 1), matvec=apply_op, dtype=float)
    prec = spla.LinearOperator((n + 1, n + 1), matvec=apply_prec, dtype=float)
    f = np.append(sys.rhs_top, sys.rhs_bottom)
    z = np.zeros(n + 1)
    budget = 10 * (n + 1)
    rtol = 0.1 * tol
    for attempt in range(6):
        z, info = spla.minres(op, f, x0=z, M=prec, rtol=rtol, maxiter=budget)
        if info < 0:
            raise SolverError(f"MINRES breakdown (info={info})", sys.relative_residual(z[:n], z[n]))
        if sys.relative_residual(z[:n], z[n]) <= tol:
            break
        rtol *= 0.1
    return z[:n], float(z[n])


def solve_saddle(sys: SaddleSystem, tol: float, direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS) -> tuple[np.ndarray, float]:
    """Solve the bordered system; the residual is checked on the original operator."""
    if sys.n + 1 <= direct_max_dofs:
        x, y = _solve_saddle_direct(sys, tol)
    else:
        x, y = _solve_saddle_minres(sys, tol)
    if not np.all(np.isfinite(x)) or not np.isfinite(y):
        raise SolverError("saddle solve produced non-finite values")
    res = sys.relative_residual(x, y)
    if res > tol:
        raise SolverError(
            f"saddle solve reached relative residual {res:.3e} > {tol:.1e}; "
            "the initial guess may be too far from the ground state",
            res,
        )
    return x, y
