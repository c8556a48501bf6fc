"""Reference Lagrange elements on the interval and triangle, and quadrature.

Reference cells:

* interval ``[0, 1]`` with vertices 0 -> x=0, 1 -> x=1;
* triangle with vertices 0 -> (0, 0), 1 -> (1, 0), 2 -> (0, 1).  Edge ``k``
  is the edge opposite vertex ``k``.

Nodes sit on the evenly spaced lattice.  Element dofs are ordered vertex
dofs first, then edge dofs (each edge walked from its lower-numbered to
its higher-numbered vertex), then interior dofs.

The nodal basis is expressed in monomials: with ``V[i, m] = psi_m(x_i)``
the monomial Vandermonde matrix, the coefficient matrix ``C = V^{-1}``
satisfies ``phi_j = sum_m C[m, j] psi_m``.  Conditioning of the monomial
Vandermonde matrix is fine up to degree 8; higher degrees would want an
orthogonal intermediate basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil

import numpy as np

from .errors import ConstructionError

__all__ = [
    "LagrangeElement",
    "QuadratureRule",
    "lagrange",
    "tabulate",
    "quadrature",
    "reference_vertices",
]

MAX_DEGREE = 8

_REF_VERTICES = {
    "interval": np.array([[0.0], [1.0]]),
    "triangle": np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
}
_TDIM = {"interval": 1, "triangle": 2}


def reference_vertices(cell: str) -> np.ndarray:
    return _REF_VERTICES[cell]


@dataclass(frozen=True, eq=False)
class LagrangeElement:
    """Continuous Lagrange element of a given degree on a reference cell.

    Attributes
    ----------
    cell : str
        ``"interval"`` or ``"triangle"``.
    degree : int
    nodes : ndarray, shape (ndofs, tdim)
        Reference coordinates of the point-evaluation nodes.
    entity_dofs : dict
        ``(dim, local entity) -> tuple of dof ids``.
    basis_coeffs : ndarray, shape (ndofs, ndofs)
        Column ``j`` holds the monomial coefficients of basis function ``j``.
    exponents : ndarray, shape (ndofs, tdim)
        Monomial exponents matching the rows of ``basis_coeffs``.
    """

    cell: str
    degree: int
    nodes: np.ndarray
    entity_dofs: dict
    basis_coeffs: np.ndarray
    exponents: np.ndarray
    _key: tuple = field(default=(), repr=False)

    @property
    def tdim(self) -> int:
        return _TDIM[self.cell]

    @property
    def space_dimension(self) -> int:
        return len(self.nodes)

    def dofs_per_dim(self) -> tuple[int, ...]:
        """Number of dofs carried by a single entity of each dimension."""
        return tuple(len(self.entity_dofs[(d, 0)]) for d in range(self.tdim + 1))

    @property
    def id(self) -> str:
        return f"Lagrange({self.cell},{self.degree})"

    def __repr__(self) -> str:
        return self.id


def _monomial_exponents(cell: str, k: int) -> np.ndarray:
    if cell == "interval":
        return np.arange(k + 1).reshape(-1, 1)
    return np.array([(a, t - a) for t in range(k + 1) for a in range(t, -1, -1)])


def _lattice(cell: str, k: int):
    """Lattice nodes and the entity each belongs to, in element dof order."""
    if cell == "interval":
        verts = [[0.0], [1.0]]
        interior = [[i / k] for i in range(1, k)]
        nodes = verts + interior
        entity_dofs = {(0, 0): (0,), (0, 1): (1,), (1, 0): tuple(range(2, k + 1))}
        return np.array(nodes), entity_dofs

    v = _REF_VERTICES["triangle"]
    nodes = [tuple(x) for x in v]
    entity_dofs = {(0, i): (i,) for i in range(3)}
    # edge k opposite vertex k, walked from the lower local vertex to the higher
    edge_ends = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
    for e in range(3):
        a, b = edge_ends[e]
        ids = []
        for t in range(1, k):
            nodes.append(tuple(v[a] + (v[b] - v[a]) * t / k))
            ids.append(len(nodes) - 1)
        entity_dofs[(1, e)] = tuple(ids)
    ids = []
    for j in range(1, k):
        for i in range(1, k - j):
            nodes.append((i / k, j / k))
            ids.append(len(nodes) - 1)
    entity_dofs[(2, 0)] = tuple(ids)
    return np.array(nodes, dtype=float), entity_dofs


def _monomials(exponents: np.ndarray, points: np.ndarray) -> np.ndarray:
    """``out[i, m] = prod_d points[i, d] ** exponents[m, d]``."""
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


def _monomial_grads(exponents: np.ndarray, points: np.ndarray) -> np.ndarray:
    """``out[i, m, d]`` = derivative of monomial ``m`` in direction ``d``."""
    npts, tdim = points.shape
    out = np.zeros((npts, len(exponents), tdim))
    for d in range(tdim):
        e = exponents.copy()
        scale = e[:, d].astype(float)
        e[:, d] = np.maximum(e[:, d] - 1, 0)
        out[:, :, d] = _monomials(e, points) * scale[None, :]
    return out


@lru_cache(maxsize=None)
def lagrange(cell: str, degree: int) -> LagrangeElement:
    """Build the degree-``degree`` Lagrange element on ``cell``."""
    if cell not in _TDIM:
        raise ValueError(f"unsupported cell {cell!r}")
    if not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in 1..{MAX_DEGREE}, got {degree}")
    nodes, entity_dofs = _lattice(cell, degree)
    exponents = _monomial_exponents(cell, degree)
    vdm = _monomials(exponents, nodes)
    if np.linalg.cond(vdm) > 1e12:
        raise ConstructionError(f"Vandermonde matrix for {cell} degree {degree} is singular")
    coeffs = np.linalg.inv(vdm)
    for arr in (nodes, coeffs, exponents):
        arr.setflags(write=False)
    return LagrangeElement(cell, degree, nodes, entity_dofs, coeffs, exponents, (cell, degree))


def tabulate(element: LagrangeElement, points) -> tuple[np.ndarray, np.ndarray]:
    """Basis values ``(npts, ndofs)`` and gradients ``(npts, ndofs, tdim)`` at reference points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != element.tdim:
        pts = pts.reshape(-1, element.tdim)
    vals = _monomials(element.exponents, pts) @ element.basis_coeffs
    grads = np.einsum("imd,mj->ijd", _monomial_grads(element.exponents, pts), element.basis_coeffs)
    return vals, grads


@dataclass(frozen=True)
class QuadratureRule:
    cell: str
    degree: int
    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def quadrature(cell: str, precision_degree: int) -> QuadratureRule:
    """Quadrature rule exact for polynomials of total degree ``precision_degree``.

    Gauss-Legendre on the interval; on the triangle a collapsed
    (Duffy-transformed) tensor rule with a Gauss-Jacobi(1, 0) factor in the
    collapsed direction.
    """
    if precision_degree < 0 or precision_degree > 4 * MAX_DEGREE + 8:
        raise ConstructionError(f"unsupported quadrature precision {precision_degree}")
    from scipy.special import roots_jacobi, roots_legendre

    n = max(1, ceil((precision_degree + 1) / 2))
    x, w = roots_legendre(n)
    x01, w01 = (x + 1) / 2, w / 2
    if cell == "interval":
        pts, wts = x01.reshape(-1, 1), w01
    elif cell == "triangle":
        # x = a, y = b (1 - a); the Jacobian (1 - a) is absorbed by Gauss-Jacobi(1, 0)
        xa, wa = roots_jacobi(n, 1.0, 0.0)
        a = (1 + xa) / 2
        wa = wa / 4
        A, B = np.meshgrid(a, x01, indexing="ij")
        WA, WB = np.meshgrid(wa, w01, indexing="ij")
        pts = np.column_stack([A.ravel(), (B * (1 - A)).ravel()])
        wts = (WA * WB).ravel()
    else:
        raise ValueError(f"unsupported cell {cell!r}")
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(cell, precision_degree, pts, wts)
