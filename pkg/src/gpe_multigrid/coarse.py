"""Full nonlinear eigensolve on a single level by damped SCF iteration.

Each step freezes the density, computes the ground state of the linear
operator ``K + MW + zeta N(u)`` by inverse iteration and mixes it with the
current iterate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import LevelOperators
from .linalg import DEFAULT_DIRECT_MAX_DOFS, SolverError, SpdSolver
from .mesh import NodalFunction

log = logging.getLogger(__name__)


class ScfError(RuntimeError):
    def __init__(self, message: str, residual: float, iterate: "EigenPair | None" = None):
        super().__init__(message)
        self.residual = residual
        self.iterate = iterate


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    u: NodalFunction

    @property
    def level(self) -> int:
        return self.u.level


@dataclass(frozen=True)
class ScfConfig:
    damping: float = 0.7
    residual_tol: float = 1e-10
    max_iters: int = 500

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    @classmethod
    def for_zeta(cls, zeta: float, **kwargs) -> "ScfConfig":
        kwargs.setdefault("damping", 0.7 if zeta <= 10 else 0.3)
        return cls(**kwargs)


@dataclass
class ScfRecord:
    iteration: int
    lam: float
    residual: float
    energy: float


@dataclass
class ScfTrace:
    records: list[ScfRecord] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["iteration,lambda,residual,energy"]
        lines += [f"{r.iteration},{r.lam:.16e},{r.residual:.6e},{r.energy:.16e}" for r in self.records]
        return "\n".join(lines) + "\n"


def initial_guess(ops: LevelOperators) -> np.ndarray:
    """Normalized interior values of ``prod_i sin(pi (x_i - a_i) / L_i)``."""
    dom = ops.mesh.domain
    x = ops.mesh.vertices[ops.interior]
    u = np.prod(np.sin(np.pi * (x - np.asarray(dom.lower)) / dom.lengths), axis=1)
    return u / ops.mass_norm(u)


def _align(x: np.ndarray, ops: LevelOperators) -> np.ndarray:
    # positive mean: sum_i (M x)_i approximates the integral of u
    return -x if np.sum(ops.M @ x) < 0 else x


def rayleigh_lambda(ops: LevelOperators, x: np.ndarray) -> float:
    """``(K u, u) + (W u, u) + zeta (u**3, u)`` for normalized ``u``."""
    return float(x @ ops.apply_nonlinear(x))


def nonlinear_residual(ops: LevelOperators, x: np.ndarray, lam: float) -> float:
    return float(np.linalg.norm(ops.apply_nonlinear(x) - lam * (ops.M @ x)))


def inverse_iteration(
    ops: LevelOperators,
    H,
    v0: np.ndarray,
    tol: float,
    max_iters: int = 1000,
    direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS,
) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of ``H v = mu M v`` by unshifted inverse iteration."""
    solver = SpdSolver(H, tol=1e-12, direct_max_dofs=direct_max_dofs)
    v = v0 / ops.mass_norm(v0)
    w = None
    res = np.inf
    for _ in range(max_iters):
        Hv = H @ v
        mu = float(v @ Hv)
        res = float(np.linalg.norm(Hv - mu * (ops.M @ v)))
        if res <= tol:
            return mu, _align(v, ops)
        w = solver.solve(ops.M @ v, x0=w)
        v = w / ops.mass_norm(w)
    raise SolverError(f"inverse iteration did not reach {tol:.1e} in {max_iters} steps", res)


def linearized_ground_state(
    current: EigenPair,
    ops: LevelOperators,
    inner_tol: float = 1e-12,
    direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS,
) -> np.ndarray:
    """Ground state of the frozen-density operator, sign-aligned with ``current``."""
    x = ops.reduce(current.u)
    _, v = inverse_iteration(ops, ops.hamiltonian(x), x, inner_tol, direct_max_dofs=direct_max_dofs)
    return -v if v @ (ops.M @ x) < 0 else v


def _mix(ops: LevelOperators, x: np.ndarray, v: np.ndarray, damping: float) -> np.ndarray:
    y = (1.0 - damping) * x + damping * v
    return y / ops.mass_norm(y)


def scf_step(
    current: EigenPair,
    ops: LevelOperators,
    damping: float,
    inner_tol: float = 1e-12,
    direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS,
) -> EigenPair:
    v = linearized_ground_state(current, ops, inner_tol, direct_max_dofs)
    y = _mix(ops, ops.reduce(current.u), v, damping)
    return EigenPair(rayleigh_lambda(ops, y), ops.expand(y))


MIN_DAMPING = 1e-4
DAMPING_GROWTH = 1.05
DAMPING_CEILING_DECAY = 0.9


def solve_coarse(
    ops: LevelOperators,
    cfg: ScfConfig | None = None,
    initial: NodalFunction | None = None,
    trace: ScfTrace | None = None,
    direct_max_dofs: int = DEFAULT_DIRECT_MAX_DOFS,
) -> EigenPair:
    """Ground state of the discrete problem on one level.

    Converged when the Euclidean norm of the reduced residual
    ``(K + MW + zeta N(u) - lam M) u`` drops below ``cfg.residual_tol``.

    The mixed step always lowers the energy for a small enough damping, so a
    step that raises it (overshoot, typical for large ``zeta``) is retried
    with two thirds of the damping.  Accepted steps let the damping grow back
    slowly, up to a ceiling that starts at ``cfg.damping`` and shrinks after
    every backtrack, so the iteration cannot cycle between the two.  Rises
    below the rounding level of the energy evaluation are ignored.
    """
    cfg = cfg or ScfConfig.for_zeta(ops.params.zeta)
    if initial is None:
        x = initial_guess(ops)
    else:
        x = ops.reduce(initial)
        x = _align(x / ops.mass_norm(x), ops)
    damping = ceiling = cfg.damping
    abs_h0 = abs(ops.H0)

    def noise(y):
        # rounding scale of the computed energy; smaller rises are not real
        quart = ops.params.zeta * ops.quartic_integral(y) if ops.params.zeta else 0.0
        return 1e-14 * (float(np.abs(y) @ (abs_h0 @ np.abs(y))) + quart)

    energy = ops.energy(x)
    lam = rayleigh_lambda(ops, x)
    res = np.inf
    for it in range(cfg.max_iters + 1):
        res = nonlinear_residual(ops, x, lam)
        if trace is not None:
            trace.records.append(ScfRecord(it, lam, res, energy))
        log.debug("scf level=%d it=%d lambda=%.12f residual=%.3e", ops.level, it, lam, res)
        if res <= cfg.residual_tol:
            return EigenPair(lam, ops.expand(x))
        if it == cfg.max_iters:
            break
        inner = max(0.1 * cfg.residual_tol, 0.05 * res)
        v = linearized_ground_state(EigenPair(lam, ops.expand(x)), ops, inner, direct_max_dofs)
        backtracked = False
        while True:
            y = _mix(ops, x, v, damping)
            e_new = ops.energy(y)
            if e_new <= energy + noise(y) or damping <= MIN_DAMPING:
                break
            damping *= 2.0 / 3.0
            backtracked = True
            log.debug("scf level=%d energy rose, damping -> %.3g", ops.level, damping)
        if backtracked:
            ceiling *= DAMPING_CEILING_DECAY
        else:
            damping = min(ceiling, damping * DAMPING_GROWTH)
        x, energy, lam = y, e_new, rayleigh_lambda(ops, y)
    raise ScfError(
        f"SCF on level {ops.level} did not converge in {cfg.max_iters} iterations "
        f"(residual {res:.3e}); retry with a smaller damping",
        res,
        EigenPair(lam, ops.expand(x)),
    )
