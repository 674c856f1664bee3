"""P1 assembly of the forms in the Gross-Pitaevskii weak problem.

All integrals use the fixed degree-4 rule of :mod:`.quadrature`, which is
exact for every integrand that appears with P1 data (the worst one is
``u**2 * v * w``).  Matrices are assembled over all vertices and then
reduced to interior degrees of freedom (homogeneous Dirichlet condition).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .mesh import BoxDomain, NodalFunction, SimplexMesh
from .quadrature import SimplexRule, degree4_rule


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """Harmonic trap ``W(x) = sum_i gamma_i x_i**2``."""

    gammas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(v) for v in self.gammas)
        if any(v <= 0 for v in g):
            raise AssemblyError(f"trap coefficients must be positive, got {g}")
        object.__setattr__(self, "gammas", g)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-1] != len(self.gammas):
            raise AssemblyError(f"potential of dimension {len(self.gammas)} evaluated at {x.shape[-1]}-d points")
        return (x**2) @ np.asarray(self.gammas)


@dataclass(frozen=True)
class ProblemParams:
    domain: BoxDomain
    zeta: float
    potential: Potential | None = None

    def __post_init__(self):
        if self.zeta < 0:
            raise AssemblyError(f"zeta must be non-negative, got {self.zeta}")
        if self.potential is not None and len(self.potential.gammas) != self.domain.dim:
            raise AssemblyError("potential and domain dimensions differ")

    @classmethod
    def example1(cls) -> "ProblemParams":
        return cls(BoxDomain.unit(3), 1.0, Potential((1.0, 1.0, 1.0)))

    @classmethod
    def example2(cls) -> "ProblemParams":
        return cls(BoxDomain.unit(3), 100.0, Potential((1.0, 2.0, 4.0)))


Weight = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


class ElementData:
    """Per-cell geometry and quadrature tables for one mesh."""

    def __init__(self, mesh: SimplexMesh, rule: SimplexRule | None = None):
        self.mesh = mesh
        self.rule = rule or degree4_rule(mesh.dim)
        self.volumes = mesh.volumes
        jac = mesh.jacobians()
        inv = np.linalg.inv(jac)
        grads = np.empty((mesh.n_cells, mesh.dim + 1, mesh.dim))
        grads[:, 1:, :] = inv
        grads[:, 0, :] = -inv.sum(axis=1)
        self.grads = grads
        # barycentric coordinates are exactly the P1 basis values
        self.phi = self.rule.barycentric

    @cached_property
    def points(self) -> np.ndarray:
        return self.rule.map_points(self.mesh.vertices[self.mesh.cells])

    def p1_values(self, values: np.ndarray) -> np.ndarray:
        """Values of the P1 interpolant of vertex ``values`` at quadrature points, (E, Q)."""
        return values[self.mesh.cells] @ self.phi.T

    def weight_values(self, weight: Weight) -> np.ndarray:
        if callable(weight):
            return np.asarray(weight(self.points), dtype=float)
        w = np.asarray(weight, dtype=float)
        if w.ndim == 0:
            return np.full((self.mesh.n_cells, self.rule.n_points), float(w))
        if w.shape != (self.mesh.n_cells, self.rule.n_points):
            raise AssemblyError(f"weight table has shape {w.shape}")
        return w


def _scatter_matrix(mesh: SimplexMesh, local: np.ndarray) -> sp.csr_matrix:
    local = 0.5 * (local + np.swapaxes(local, 1, 2))
    k = mesh.dim + 1
    rows = np.repeat(mesh.cells, k, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, k)).ravel()
    n = mesh.n_vertices
    a = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    a.sum_duplicates()
    # mirror exactly: (a + a.T) / 2 is bitwise symmetric
    return ((a + a.T) * 0.5).tocsr()


def assemble_stiffness(mesh: SimplexMesh, data: ElementData | None = None) -> sp.csr_matrix:
    """Full-vertex matrix of ``(grad phi_i, grad phi_j)``."""
    data = data or ElementData(mesh)
    local = data.volumes[:, None, None] * np.einsum("eid,ejd->eij", data.grads, data.grads)
    return _scatter_matrix(mesh, local)


def assemble_weighted_mass(mesh: SimplexMesh, weight: Weight, data: ElementData | None = None) -> sp.csr_matrix:
    """Full-vertex matrix of ``(weight * phi_i, phi_j)``.

    ``weight`` may be a callable on physical points of shape (E, Q, d), a
    table of values at the quadrature points (E, Q), or a constant.
    """
    data = data or ElementData(mesh)
    wq = data.weight_values(weight) * data.rule.weights
    local = np.einsum("eq,qi,qj->eij", data.volumes[:, None] * wq, data.phi, data.phi)
    return _scatter_matrix(mesh, local)


def assemble_mass(mesh: SimplexMesh, data: ElementData | None = None) -> sp.csr_matrix:
    return assemble_weighted_mass(mesh, 1.0, data)


def assemble_load(mesh: SimplexMesh, integrand: np.ndarray, data: ElementData | None = None) -> np.ndarray:
    """Full-vertex vector of ``(f, phi_i)`` for ``f`` tabulated at quadrature points."""
    data = data or ElementData(mesh)
    local = np.einsum("eq,qi->ei", data.volumes[:, None] * integrand * data.rule.weights, data.phi)
    return np.bincount(mesh.cells.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def assemble_cubic_vector(mesh: SimplexMesh, u: NodalFunction, zeta: float, data: ElementData | None = None) -> np.ndarray:
    """Full-vertex vector of ``2 zeta (u**3, phi_i)``."""
    if u.level != mesh.level or u.values.shape[0] != mesh.n_vertices:
        raise AssemblyError(f"function on level {u.level} used with mesh on level {mesh.level}")
    data = data or ElementData(mesh)
    uq = data.p1_values(u.values)
    return assemble_load(mesh, 2.0 * zeta * uq**3, data)


def eliminate_dirichlet(obj, mesh: SimplexMesh):
    """Restrict a full-vertex matrix or vector to interior vertices."""
    idx = mesh.interior_vertices
    if sp.issparse(obj):
        return obj.tocsr()[idx][:, idx].tocsr()
    return np.asarray(obj)[idx]


def expand_dirichlet(reduced: np.ndarray, mesh: SimplexMesh) -> np.ndarray:
    full = np.zeros(mesh.n_vertices)
    full[mesh.interior_vertices] = reduced
    return full


class LevelOperators:
    """Assembled, Dirichlet-reduced operators for one mesh level.

    ``K`` is the stiffness matrix, ``M`` the mass matrix and ``MW`` the
    potential-weighted mass matrix (zero when no trap is given).  Nonlinear
    pieces are assembled on demand from full-vertex coefficient vectors.
    """

    def __init__(self, mesh: SimplexMesh, params: ProblemParams):
        self.mesh = mesh
        self.params = params
        self.data = ElementData(mesh)
        self.interior = mesh.interior_vertices
        self.K = eliminate_dirichlet(assemble_stiffness(mesh, self.data), mesh)
        self.M = eliminate_dirichlet(assemble_mass(mesh, self.data), mesh)
        if params.potential is None:
            self.MW = sp.csr_matrix(self.K.shape)
        else:
            self.MW = eliminate_dirichlet(assemble_weighted_mass(mesh, params.potential, self.data), mesh)
        self.H0 = (self.K + self.MW).tocsr()

    @property
    def level(self) -> int:
        return self.mesh.level

    @property
    def n_dofs(self) -> int:
        return self.interior.size

    def reduce(self, u: NodalFunction | np.ndarray) -> np.ndarray:
        values = u.values if isinstance(u, NodalFunction) else u
        return np.asarray(values)[self.interior]

    def expand(self, x: np.ndarray) -> NodalFunction:
        return NodalFunction(self.level, expand_dirichlet(x, self.mesh))

    def density_mass(self, x: np.ndarray, factor: float = 1.0) -> sp.csr_matrix:
        """Reduced matrix of ``factor * (u**2 phi_i, phi_j)`` for interior values ``x``."""
        uq = self.data.p1_values(expand_dirichlet(x, self.mesh))
        return eliminate_dirichlet(assemble_weighted_mass(self.mesh, factor * uq**2, self.data), self.mesh)

    def cubic(self, x: np.ndarray, zeta: float) -> np.ndarray:
        """Reduced vector of ``2 zeta (u**3, phi_i)``."""
        u = self.expand(x)
        return assemble_cubic_vector(self.mesh, u, zeta, self.data)[self.interior]

    def quartic_integral(self, x: np.ndarray) -> float:
        uq = self.data.p1_values(expand_dirichlet(x, self.mesh))
        return float(np.sum(self.data.volumes[:, None] * self.data.rule.weights * uq**4))

    def hamiltonian(self, x: np.ndarray) -> sp.csr_matrix:
        """``K + MW + zeta N(u)``: the frozen-density operator."""
        zeta = self.params.zeta
        if zeta == 0:
            return self.H0
        return (self.H0 + self.density_mass(x, zeta)).tocsr()

    def apply_nonlinear(self, x: np.ndarray) -> np.ndarray:
        """``(K + MW) u + zeta (u**3, phi)``."""
        out = self.H0 @ x
        if self.params.zeta:
            out = out + 0.5 * self.cubic(x, self.params.zeta)
        return out

    def mass_norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(x @ (self.M @ x)))

    def energy(self, x: np.ndarray) -> float:
        """``int 1/2 |grad u|^2 + 1/2 W u^2 + 1/4 zeta u^4``."""
        e = 0.5 * float(x @ (self.H0 @ x))
        if self.params.zeta:
            e += 0.25 * self.params.zeta * self.quartic_integral(x)
        return e
