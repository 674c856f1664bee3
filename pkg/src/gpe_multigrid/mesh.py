"""Uniform simplicial meshes of box domains and their regular refinement.

The initial mesh splits every lattice cube into ``d!`` Kuhn simplices.  Cells
keep the Kuhn vertex ordering (each consecutive vertex differs from the
previous one by a single axis step); Bey's regular refinement preserves that
ordering, so every refinement produces ``2**d`` congruent children and the
resulting mesh family is shape-regular with a level-independent constant.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

BOUNDARY_TOL = 1e-14
REFINEMENT_INDEX = 2

# Children of a cell in terms of local labels: an int is a parent vertex, a
# pair is the midpoint of that parent edge.
_CHILDREN = {
    1: [(0, (0, 1)), ((0, 1), 1)],
    2: [
        (0, (0, 1), (0, 2)),
        ((0, 1), 1, (1, 2)),
        ((0, 2), (1, 2), 2),
        ((0, 1), (0, 2), (1, 2)),
    ],
    3: [
        (0, (0, 1), (0, 2), (0, 3)),
        ((0, 1), 1, (1, 2), (1, 3)),
        ((0, 2), (1, 2), 2, (2, 3)),
        ((0, 3), (1, 3), (2, 3), 3),
        ((0, 1), (0, 2), (0, 3), (1, 3)),
        ((0, 1), (0, 2), (1, 2), (1, 3)),
        ((0, 2), (0, 3), (1, 3), (2, 3)),
        ((0, 2), (1, 2), (1, 3), (2, 3)),
    ],
}

_VTK_CELL_TYPES = {1: 3, 2: 5, 3: 10}


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class BoxDomain:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi):
            raise MeshError("lower and upper corners differ in dimension")
        if len(lo) not in (1, 2, 3):
            raise MeshError(f"dimension must be 1, 2 or 3, got {len(lo)}")
        if any(h <= l for l, h in zip(lo, hi)):
            raise MeshError(f"degenerate box {lo} x {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, dim: int) -> "BoxDomain":
        if dim not in (1, 2, 3):
            raise MeshError(f"dimension must be 1, 2 or 3, got {dim}")
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return math.prod(h - l for l, h in zip(self.lower, self.upper))

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)


@dataclass(frozen=True, eq=False)
class SimplexMesh:
    """Conforming simplicial mesh of a box.

    ``cells`` rows list vertex indices in Kuhn order, which is not necessarily
    positively oriented; use :meth:`oriented_cells` when orientation matters.
    """

    domain: BoxDomain
    vertices: np.ndarray
    cells: np.ndarray
    level: int = 1

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @cached_property
    def boundary_vertex_flags(self) -> np.ndarray:
        lo = np.asarray(self.domain.lower)
        hi = np.asarray(self.domain.upper)
        on_face = (np.abs(self.vertices - lo) <= BOUNDARY_TOL) | (
            np.abs(self.vertices - hi) <= BOUNDARY_TOL
        )
        return on_face.any(axis=1)

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertex_flags)

    def jacobians(self) -> np.ndarray:
        x = self.vertices[self.cells]
        return np.swapaxes(x[:, 1:, :] - x[:, :1, :], 1, 2)

    def signed_volumes(self) -> np.ndarray:
        det = np.linalg.det(self.jacobians())
        return det / math.factorial(self.dim)

    @cached_property
    def volumes(self) -> np.ndarray:
        vol = np.abs(self.signed_volumes())
        bad = np.flatnonzero(vol <= 1e-14 * self.domain.volume / self.n_cells)
        if bad.size:
            raise MeshError(f"degenerate cell {int(bad[0])} with volume {vol[bad[0]]:.3e}")
        return vol

    def oriented_cells(self) -> np.ndarray:
        cells = self.cells.copy()
        flip = self.signed_volumes() < 0
        cells[flip, -2], cells[flip, -1] = self.cells[flip, -1], self.cells[flip, -2]
        return cells

    def cell_diameters(self) -> np.ndarray:
        x = self.vertices[self.cells]
        diam = np.zeros(self.n_cells)
        for a, b in itertools.combinations(range(self.dim + 1), 2):
            diam = np.maximum(diam, np.linalg.norm(x[:, a] - x[:, b], axis=1))
        return diam

    @cached_property
    def h_max(self) -> float:
        return float(self.cell_diameters().max())

    def inradii(self) -> np.ndarray:
        d = self.dim
        if d == 1:
            return 0.5 * self.volumes
        x = self.vertices[self.cells]
        facet_total = np.zeros(self.n_cells)
        for skip in range(d + 1):
            facet = np.delete(x, skip, axis=1)
            edges = facet[:, 1:, :] - facet[:, :1, :]
            gram = np.einsum("eik,ejk->eij", edges, edges)
            facet_total += np.sqrt(np.abs(np.linalg.det(gram))) / math.factorial(d - 1)
        return d * self.volumes / facet_total

    def write_vtk(self, path: str | Path, point_data: dict[str, np.ndarray] | None = None) -> None:
        """Write the mesh as a legacy ASCII VTK unstructured grid."""
        pts = np.zeros((self.n_vertices, 3))
        pts[:, : self.dim] = self.vertices
        k = self.dim + 1
        lines = [
            "# vtk DataFile Version 3.0",
            f"level {self.level}",
            "ASCII",
            "DATASET UNSTRUCTURED_GRID",
            f"POINTS {self.n_vertices} double",
        ]
        lines += [" ".join(f"{c:.17g}" for c in p) for p in pts]
        lines.append(f"CELLS {self.n_cells} {self.n_cells * (k + 1)}")
        lines += [f"{k} " + " ".join(map(str, c)) for c in self.oriented_cells()]
        lines.append(f"CELL_TYPES {self.n_cells}")
        lines += [str(_VTK_CELL_TYPES[self.dim])] * self.n_cells
        if point_data:
            lines.append(f"POINT_DATA {self.n_vertices}")
            for name, values in point_data.items():
                lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                lines += [f"{v:.17g}" for v in np.asarray(values, dtype=float)]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True, eq=False)
class Prolongation:
    coarse_level: int
    fine_level: int
    matrix: sp.csr_matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(eq=False)
class LevelHierarchy:
    meshes: list[SimplexMesh]
    prolongations: list[Prolongation] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.meshes)

    def __getitem__(self, level: int) -> SimplexMesh:
        """Mesh on 1-based ``level``."""
        return self.meshes[level - 1]

    def prolongation(self, coarse_level: int) -> Prolongation:
        return self.prolongations[coarse_level - 1]

    def prolongate_to(self, values: np.ndarray, from_level: int, to_level: int) -> np.ndarray:
        for lvl in range(from_level, to_level):
            values = self.prolongation(lvl).matrix @ values
        return values


def build_initial_mesh(domain: BoxDomain, cells_per_axis: int) -> SimplexMesh:
    if not isinstance(cells_per_axis, (int, np.integer)) or cells_per_axis < 1:
        raise MeshError(f"cells_per_axis must be a positive integer, got {cells_per_axis!r}")
    d = domain.dim
    n = int(cells_per_axis)
    ticks = [np.linspace(lo, hi, n + 1) for lo, hi in zip(domain.lower, domain.upper)]
    # x varies fastest
    grid = np.meshgrid(*ticks, indexing="ij")
    vertices = np.stack([g.ravel(order="F") for g in grid], axis=1)

    strides = np.array([(n + 1) ** i for i in range(d)])
    corners = np.stack(
        np.meshgrid(*[np.arange(n)] * d, indexing="ij"), axis=-1
    ).reshape(-1, d, order="F")
    corner_ids = corners @ strides
    cells = []
    for perm in itertools.permutations(range(d)):
        offsets = [0]
        for axis in perm:
            offsets.append(offsets[-1] + strides[axis])
        cells.append(corner_ids[:, None] + np.array(offsets)[None, :])
    # cube-major order: the d! Kuhn simplices of a cube are contiguous
    cells = np.stack(cells, axis=1).reshape(-1, d + 1)
    return SimplexMesh(domain, vertices, cells.astype(np.int64), level=1)


def refine_regular(mesh: SimplexMesh) -> tuple[SimplexMesh, Prolongation]:
    """Split every cell into ``2**d`` congruent children.

    Coarse vertices keep their indices; edge midpoints are appended in the
    order of their sorted edge keys.
    """
    d = mesh.dim
    nv = mesh.n_vertices
    pairs = list(itertools.combinations(range(d + 1), 2))
    a = mesh.cells[:, [p[0] for p in pairs]]
    b = mesh.cells[:, [p[1] for p in pairs]]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys = lo * np.int64(nv) + hi
    unique_keys, inverse = np.unique(keys.ravel(), return_inverse=True)
    inverse = inverse.reshape(keys.shape)
    del keys, a, b, lo, hi
    e0, e1 = np.divmod(unique_keys, np.int64(nv))
    midpoints = 0.5 * (mesh.vertices[e0] + mesh.vertices[e1])
    vertices = np.concatenate([mesh.vertices, midpoints])

    def label(item):
        if isinstance(item, tuple):
            return nv + inverse[:, pairs.index(item)]
        return mesh.cells[:, item]

    children = np.empty((mesh.n_cells, 2**d, d + 1), dtype=np.int64)
    for c, child in enumerate(_CHILDREN[d]):
        for j, item in enumerate(child):
            children[:, c, j] = label(item)
    fine = SimplexMesh(mesh.domain, vertices, children.reshape(-1, d + 1), level=mesh.level + 1)

    n_mid = unique_keys.size
    rows = np.concatenate([np.arange(nv), nv + np.arange(n_mid), nv + np.arange(n_mid)])
    cols = np.concatenate([np.arange(nv), e0, e1])
    vals = np.concatenate([np.ones(nv), np.full(2 * n_mid, 0.5)])
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(nv + n_mid, nv))
    return fine, Prolongation(mesh.level, fine.level, matrix)


def build_hierarchy(domain: BoxDomain, cells_per_axis: int, n_levels: int) -> LevelHierarchy:
    if n_levels < 1:
        raise MeshError(f"n_levels must be at least 1, got {n_levels}")
    hierarchy = LevelHierarchy([build_initial_mesh(domain, cells_per_axis)])
    for _ in range(n_levels - 1):
        fine, prolong = refine_regular(hierarchy.meshes[-1])
        hierarchy.meshes.append(fine)
        hierarchy.prolongations.append(prolong)
    return hierarchy


@dataclass(frozen=True, eq=False)
class NodalFunction:
    """P1 function given by its values at every vertex of a mesh level."""

    level: int
    values: np.ndarray


def prolongate(p: Prolongation, coarse: NodalFunction) -> NodalFunction:
    if coarse.level != p.coarse_level or coarse.values.shape[0] != p.shape[1]:
        raise MeshError(
            f"function on level {coarse.level} with {coarse.values.shape[0]} values "
            f"does not match prolongation from level {p.coarse_level} ({p.shape[1]} vertices)"
        )
    return NodalFunction(p.fine_level, p.matrix @ coarse.values)
