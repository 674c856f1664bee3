"""Quadrature on simplices.

Rules are returned in barycentric coordinates with weights normalized to sum
to one, so an integral over a cell is ``volume * sum(w * f(points))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class SimplexRule:
    dim: int
    degree: int
    barycentric: np.ndarray  # (n_points, dim + 1)
    weights: np.ndarray  # (n_points,), sums to 1

    @property
    def n_points(self) -> int:
        return self.weights.size

    def map_points(self, corners: np.ndarray) -> np.ndarray:
        """Physical points for cells with vertex coordinates ``corners`` (E, d+1, d)."""
        return np.einsum("qi,eid->eqd", self.barycentric, corners)


def _orbit_3(a: float) -> list[list[float]]:
    return [[1 - 2 * a if i == k else a for i in range(3)] for k in range(3)]


def _orbit_4(a: float) -> list[list[float]]:
    return [[1 - 3 * a if i == k else a for i in range(4)] for k in range(4)]


def _orbit_22(a: float) -> list[list[float]]:
    out = []
    for i, j in itertools.combinations(range(4), 2):
        p = [0.5 - a] * 4
        p[i] = p[j] = a
        out.append(p)
    return out


def _degree4_rule(dim: int) -> SimplexRule:
    if dim == 1:
        s = math.sqrt(0.6) / 2
        bary = [[0.5 + s, 0.5 - s], [0.5, 0.5], [0.5 - s, 0.5 + s]]
        w = [5 / 18, 8 / 18, 5 / 18]
        return SimplexRule(1, 5, np.array(bary), np.array(w))
    if dim == 2:
        # 6-point symmetric rule, exact to degree 4
        bary = _orbit_3(0.4459484909159648) + _orbit_3(0.09157621350977078)
        w = [0.22338158967801133] * 3 + [0.109951743655322] * 3
        return SimplexRule(2, 4, np.array(bary), np.array(w))
    if dim == 3:
        # 14-point symmetric rule, exact to degree 5
        bary = (
            _orbit_4(0.0927352503108912)
            + _orbit_4(0.3108859192633006)
            + _orbit_22(0.4544962958743504)
        )
        w = [0.07349304311636196] * 4 + [0.11268792571801584] * 4 + [0.042546020777081466] * 6
        return SimplexRule(3, 5, np.array(bary), np.array(w))
    raise ValueError(f"no rule for dimension {dim}")


_RULES = {d: _degree4_rule(d) for d in (1, 2, 3)}


def degree4_rule(dim: int) -> SimplexRule:
    return _RULES[dim]


def collapsed_gauss_rule(dim: int, degree: int) -> SimplexRule:
    """Tensor Gauss-Legendre rule pulled back to the simplex by the Duffy map.

    Exact for polynomials of total degree ``degree``.  Used as an independent
    high-order reference; it shares no code with :func:`degree4_rule`.
    """
    n = (degree + dim) // 2 + 1
    g, gw = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (g + 1.0)
    tw = 0.5 * gw
    pts, wts = [], []
    for idx in itertools.product(range(n), repeat=dim):
        s = [t[i] for i in idx]
        # x_k = s_k * prod_{j<k} (1 - s_j)
        x, scale, jac = [], 1.0, 1.0
        for k, sk in enumerate(s):
            x.append(sk * scale)
            if k < dim - 1:
                jac *= (1.0 - sk) ** (dim - 1 - k)
            scale *= 1.0 - sk
        pts.append([1.0 - sum(x)] + x)
        wts.append(math.prod(tw[i] for i in idx) * jac * math.factorial(dim))
    return SimplexRule(dim, degree, np.array(pts), np.array(wts))
