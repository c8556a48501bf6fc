"""Mesh topology stored as a layered DAG of points.

A :class:`Plex` numbers every mesh entity (cells, edges, vertices) with a
single integer from its chart ``[0, npoints)``.  The *cone* of a point is
the ordered list of points one dimension lower that bound it, the
*support* the points one dimension higher that it bounds.  Closure and
star are the transitive versions of the two relations.

The generators lay the chart out as cells, then vertices, then edges.
Facets on the domain boundary carry an integer subdomain id in
``face_sets``.
"""
from __future__ import annotations

import warnings
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from .errors import UnknownSubdomainWarning

__all__ = [
    "Plex",
    "build_unit_interval_mesh",
    "build_unit_square_mesh",
    "boundary_points",
]


class Plex:
    """Immutable mesh topology with vertex coordinates and facet labels.

    Parameters
    ----------
    cones : sequence of sequences of int
        ``cones[p]`` lists the points covering ``p`` from below.
    dims : sequence of int
        Topological dimension of each point.
    coordinates : mapping
        Vertex point -> spatial coordinates.
    face_sets : mapping
        Facet point -> positive subdomain id.
    name : str
        Identifier used in form signatures.
    """

    def __init__(
        self,
        cones: Sequence[Sequence[int]],
        dims: Sequence[int],
        coordinates: Mapping[int, Sequence[float]],
        face_sets: Mapping[int, int] | None = None,
        name: str = "plex",
    ):
        if len(cones) != len(dims):
            raise ValueError("cones and dims must have one entry per point")
        self._cones = tuple(tuple(int(q) for q in c) for c in cones)
        self._dims = np.array(dims, dtype=np.int64)
        self._dims.setflags(write=False)
        self.name = name
        npoints = len(self._cones)

        supports: list[list[int]] = [[] for _ in range(npoints)]
        for p, cone in enumerate(self._cones):
            for q in cone:
                if not 0 <= q < npoints:
                    raise ValueError(f"cone of point {p} references {q} outside chart")
                supports[q].append(p)
        self._supports = tuple(tuple(s) for s in supports)

        self.tdim = int(self._dims.max()) if npoints else 0
        self.gdim = len(next(iter(coordinates.values()))) if coordinates else 0
        coords = np.full((npoints, max(self.gdim, 1)), np.nan)
        for p, x in coordinates.items():
            coords[p, : self.gdim] = x
        self._coords = coords[:, : self.gdim] if self.gdim else coords[:, :0]
        self._coords.setflags(write=False)
        self.face_sets = dict(face_sets or {})
        self._strata = {
            d: np.flatnonzero(self._dims == d) for d in range(self.tdim + 1)
        }

    # -- chart and strata -------------------------------------------------
    @property
    def chart(self) -> tuple[int, int]:
        return 0, len(self._cones)

    @property
    def npoints(self) -> int:
        return len(self._cones)

    def dim(self, p: int) -> int:
        self._check(p)
        return int(self._dims[p])

    @property
    def dims(self) -> np.ndarray:
        return self._dims

    def stratum(self, d: int) -> np.ndarray:
        """Points of topological dimension ``d`` in chart order."""
        return self._strata.get(d, np.empty(0, dtype=np.int64))

    @property
    def cells(self) -> np.ndarray:
        return self.stratum(self.tdim)

    @property
    def vertices(self) -> np.ndarray:
        return self.stratum(0)

    @property
    def facets(self) -> np.ndarray:
        return self.stratum(self.tdim - 1)

    def strata_sizes(self) -> dict[int, int]:
        return {d: len(pts) for d, pts in self._strata.items()}

    # -- adjacency --------------------------------------------------------
    def _check(self, p: int) -> None:
        if not 0 <= p < len(self._cones):
            raise IndexError(f"point {p} outside chart {self.chart}")

    def cone(self, p: int) -> tuple[int, ...]:
        self._check(p)
        return self._cones[p]

    def support(self, p: int) -> tuple[int, ...]:
        self._check(p)
        return self._supports[p]

    def closure(self, p: int) -> list[int]:
        """``p`` followed by its cone, the cones of those, and so on."""
        return self._transitive(p, self._cones)

    def star(self, p: int) -> list[int]:
        """``p`` followed by its support, their supports, and so on."""
        return self._transitive(p, self._supports)

    def _transitive(self, p: int, rel) -> list[int]:
        self._check(p)
        out = [p]
        seen = {p}
        frontier = [p]
        while frontier:
            nxt = []
            for q in frontier:
                for r in rel[q]:
                    if r not in seen:
                        seen.add(r)
                        out.append(r)
                        nxt.append(r)
            frontier = nxt
        return out

    def cell_vertices(self, c: int) -> tuple[int, ...]:
        """Vertices of a cell in ascending point order."""
        return tuple(sorted(q for q in self.closure(c) if self._dims[q] == 0))

    def coordinates(self, p: int) -> np.ndarray:
        self._check(p)
        if self._dims[p] != 0:
            raise ValueError(f"point {p} is not a vertex")
        return self._coords[p]

    def vertex_coordinates(self, points: Iterable[int]) -> np.ndarray:
        return np.array([self._coords[p] for p in points])

    # -- misc ---------------------------------------------------------------
    def subdomain_ids(self) -> set[int]:
        return set(self.face_sets.values())

    def check(self) -> None:
        """Assert the structural invariants (duality, dimension drop, labels)."""
        for p, cone in enumerate(self._cones):
            for q in cone:
                assert p in self._supports[q]
                assert self._dims[q] == self._dims[p] - 1
            d = self._dims[p]
            if d == 0:
                assert not cone
            elif d == 1:
                assert len(cone) == 2
            elif d == 2:
                assert len(cone) == 3
        for p, sup in enumerate(self._supports):
            for q in sup:
                assert p in self._cones[q]
        for f in self.face_sets:
            assert self._dims[f] == self.tdim - 1
            assert len(self._supports[f]) == 1

    def __repr__(self) -> str:
        return f"Plex({self.name!r}, strata={self.strata_sizes()})"


def build_unit_interval_mesh(n: int, length: float = 1.0) -> Plex:
    """Interval ``[0, length]`` split into ``n`` equal cells.

    Points ``0..n-1`` are cells and ``n..2n`` vertices from left to right.
    The left end carries subdomain 1 and the right end subdomain 2.
    """
    if n < 1:
        raise ValueError(f"interval mesh needs at least one cell, got {n}")
    cones: list[tuple[int, ...]] = [(n + i, n + i + 1) for i in range(n)]
    cones += [()] * (n + 1)
    dims = [1] * n + [0] * (n + 1)
    coords = {n + i: (length * i / n,) for i in range(n + 1)}
    if n > 0:
        coords[2 * n] = (float(length),)
    name = f"IntervalMesh({n},{float(length)!r})"
    return Plex(cones, dims, coords, {n: 1, 2 * n: 2}, name=name)


def build_unit_square_mesh(nx: int, ny: int) -> Plex:
    """Unit square split into ``nx * ny`` squares, each cut into two triangles.

    The cut runs from the lower-left to the upper-right corner.  Boundary
    edges are labelled 1 (x=0), 2 (x=1), 3 (y=0) and 4 (y=1).
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"square mesh needs positive cell counts, got {nx}x{ny}")
    ncells = 2 * nx * ny
    nverts = (nx + 1) * (ny + 1)

    def vid(i: int, j: int) -> int:
        return ncells + j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris.append(tuple(sorted((v00, v10, v11))))
            tris.append(tuple(sorted((v00, v11, v01))))

    edge_set = set()
    for a, b, c in tris:
        edge_set.update({(a, b), (a, c), (b, c)})
    edges = sorted(edge_set)
    first_edge = ncells + nverts
    edge_id = {e: first_edge + k for k, e in enumerate(edges)}

    cones: list[tuple[int, ...]] = []
    for a, b, c in tris:
        # edge k is opposite local vertex k
        cones.append((edge_id[(b, c)], edge_id[(a, c)], edge_id[(a, b)]))
    cones += [()] * nverts
    cones += list(edges)
    dims = [2] * ncells + [0] * nverts + [1] * len(edges)

    coords = {}
    for j in range(ny + 1):
        for i in range(nx + 1):
            coords[vid(i, j)] = (i / nx, j / ny)

    face_sets = {}
    for (a, b), e in edge_id.items():
        (xa, ya), (xb, yb) = coords[a], coords[b]
        if xa == xb == 0.0:
            face_sets[e] = 1
        elif xa == xb == 1.0:
            face_sets[e] = 2
        elif ya == yb == 0.0:
            face_sets[e] = 3
        elif ya == yb == 1.0:
            face_sets[e] = 4
    return Plex(cones, dims, coords, face_sets, name=f"UnitSquareMesh({nx},{ny})")


def boundary_points(plex: Plex, boundary_set: Iterable[int]) -> list[int]:
    """Sorted points in the closure of every facet labelled with an id in ``boundary_set``.

    Ids that no facet carries trigger an :class:`UnknownSubdomainWarning`
    and contribute nothing.
    """
    ids = set(boundary_set)
    unknown = ids - plex.subdomain_ids()
    if unknown:
        warnings.warn(
            f"subdomain ids {sorted(unknown)} do not label any facet of {plex.name}",
            UnknownSubdomainWarning,
            stacklevel=2,
        )
    pts: set[int] = set()
    for f, label in plex.face_sets.items():
        if label in ids:
            pts.update(plex.closure(f))
    return sorted(pts)
