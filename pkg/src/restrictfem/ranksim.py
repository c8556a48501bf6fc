"""Sequential simulation of a mesh distributed over several ranks.

Cells are split into contiguous blocks, one per rank.  Each rank sees its
own cells plus (with ``overlap=1``) every cell sharing a point with them.
A point is owned by the lowest rank whose cells contain it; every other
rank holding it sees a ghost.  An owned point is *core* when nothing in
the closure of its star is a ghost, so computations on it never read
halo data.

The star forest maps each ghost dof (leaf) to the owner's copy (root).
It covers constrained dofs as well; ``legacy=True`` rebuilds the older
forest that skipped them, under which constrained ghosts keep stale
values after an exchange.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from math import ceil

import numpy as np
import scipy.sparse as sp

from .assembly import _local_matrix, _local_vector
from .elements import LagrangeElement
from .errors import ConsistencyError
from .numbering import PointClass, Section, make_global_numbering
from .plex import Plex, boundary_points
from .solve import linear_solve
from .spaces import BilinearForm, FunctionSpace, LinearForm

__all__ = [
    "Partition",
    "RankView",
    "StarForest",
    "partition_cells",
    "point_owners",
    "build_rank_views",
    "rank_spaces",
    "build_star_forest",
    "halo_exchange",
    "parallel_global_numbering",
    "distributed_solve",
]


@dataclass(frozen=True)
class Partition:
    """``cell_owner[i]`` is the rank of the ``i``-th cell of the plex."""

    nranks: int
    cell_owner: np.ndarray

    def cells_of(self, rank: int) -> np.ndarray:
        return np.flatnonzero(self.cell_owner == rank)


def partition_cells(plex: Plex, nranks: int) -> Partition:
    """Contiguous blocks of ``ceil(ncells / nranks)`` cells per rank."""
    ncells = len(plex.cells)
    if nranks < 1:
        raise ValueError(f"nranks must be at least 1, got {nranks}")
    if nranks > ncells:
        raise ValueError(f"cannot split {ncells} cells over {nranks} ranks")
    block = ceil(ncells / nranks)
    owner = np.arange(ncells) // block
    owner.setflags(write=False)
    return Partition(nranks, owner)


def point_owners(plex: Plex, partition: Partition) -> np.ndarray:
    """Owner rank of every point: the lowest rank among cells containing it."""
    owner = np.full(plex.npoints, partition.nranks, dtype=np.int64)
    for i, c in enumerate(plex.cells):
        r = partition.cell_owner[i]
        for p in plex.closure(int(c)):
            owner[p] = min(owner[p], r)
    return owner


@dataclass
class RankView:
    """One rank's local part of the mesh.

    Attributes
    ----------
    rank : int
    plex : Plex
        Local plex, points in global order.
    local_to_global : ndarray
        Global point of each local point.
    classes : ndarray
        :class:`PointClass` of each local point.
    owners : ndarray
        Owner rank of each local point.
    owned_cells : ndarray
        Local cell indices (positions in ``plex.cells``) this rank owns.
    """

    rank: int
    plex: Plex
    local_to_global: np.ndarray
    classes: np.ndarray
    owners: np.ndarray
    owned_cells: np.ndarray

    def __post_init__(self):
        self.global_to_local = {int(g): i for i, g in enumerate(self.local_to_global)}

    def points_of(self, cls: PointClass) -> np.ndarray:
        return np.flatnonzero(self.classes == cls)


def _local_plex(plex: Plex, points: list[int], name: str) -> Plex:
    g2l = {g: i for i, g in enumerate(points)}
    cones = [[g2l[q] for q in plex.cone(g)] for g in points]
    dims = [plex.dim(g) for g in points]
    coords = {g2l[g]: tuple(plex.coordinates(g)) for g in points if plex.dim(g) == 0}
    face_sets = {g2l[f]: lab for f, lab in plex.face_sets.items() if f in g2l}
    return Plex(cones, dims, coords, face_sets, name=name)


def build_rank_views(plex: Plex, partition: Partition, overlap: int = 1) -> list[RankView]:
    """Local views of every rank.

    ``overlap=1`` adds every cell sharing a point with the rank's own
    cells; ``overlap=0`` keeps only the closures of its own cells.
    """
    if overlap not in (0, 1):
        raise ValueError(f"overlap must be 0 or 1, got {overlap}")
    owner = point_owners(plex, partition)
    cells = plex.cells
    views = []
    for r in range(partition.nranks):
        own = {int(cells[i]) for i in partition.cells_of(r)}
        local_cells = set(own)
        if overlap:
            for c in own:
                for p in plex.closure(c):
                    local_cells.update(q for q in plex.star(p) if plex.dim(q) == plex.tdim)
        pts = sorted({p for c in local_cells for p in plex.closure(c)})
        lplex = _local_plex(plex, pts, f"{plex.name}@rank{r}")
        l2g = np.array(pts, dtype=np.int64)
        lowner = owner[l2g]

        classes = np.where(lowner == r, PointClass.OWNED, PointClass.GHOST).astype(np.int64)
        for p in range(len(pts)):
            if classes[p] == PointClass.GHOST:
                continue
            reach = {q for s in lplex.star(p) for q in lplex.closure(s)}
            if all(classes[q] != PointClass.GHOST for q in reach):
                classes[p] = PointClass.CORE

        lcells = lplex.cells
        owned_cells = np.array(
            [i for i, c in enumerate(lcells) if int(l2g[c]) in own], dtype=np.int64
        )
        views.append(RankView(r, lplex, l2g, classes, lowner, owned_cells))
    return views


def rank_spaces(
    views: Sequence[RankView],
    element: LagrangeElement,
    boundary_set: Iterable[int] = (),
    global_plex: Plex | None = None,
) -> list[FunctionSpace]:
    """Per-rank function spaces with the ranks' point classes.

    Constrained points come from the global plex when given, so ghost
    points whose labelled facets are not local are still constrained.
    """
    boundary_set = sorted(set(boundary_set))
    gcon = set(boundary_points(global_plex, boundary_set)) if global_plex and boundary_set else None
    out = []
    for v in views:
        cpts = None
        if gcon is not None:
            cpts = [i for i, g in enumerate(v.local_to_global) if int(g) in gcon]
        out.append(FunctionSpace(v.plex, element, boundary_set, v.classes, cpts))
    return out


@dataclass(frozen=True)
class StarForest:
    """Leaf ``(rank, local dof)`` -> root ``(rank, local dof)`` pairs.

    Attributes
    ----------
    leaves, roots : ndarray, shape (nedges, 2)
    sizes : tuple of int
        Local vector length on each rank.
    legacy : bool
        Built without the constrained ghost dofs.
    """

    leaves: np.ndarray
    roots: np.ndarray
    sizes: tuple[int, ...]
    legacy: bool = False

    @property
    def nleaves(self) -> int:
        return len(self.leaves)

    def leaves_on(self, rank: int) -> np.ndarray:
        return self.leaves[self.leaves[:, 0] == rank, 1]


def build_star_forest(
    views: Sequence[RankView], spaces: Sequence[FunctionSpace], legacy: bool = False
) -> StarForest:
    """Leaf for every dof of every ghost point, matched to the owner's dof.

    Dofs within a point are matched by position, which is valid because
    every rank orients shared edges from the lower to the higher global
    vertex.
    """
    leaves, roots = [], []
    for v, V in zip(views, spaces):
        sec = V.section
        for p in v.points_of(PointClass.GHOST):
            g = int(v.local_to_global[p])
            o = int(v.owners[p])
            ov, oV = views[o], spaces[o]
            if g not in ov.global_to_local:
                raise ConsistencyError(f"rank {o} owns point {g} but does not hold it")
            op = ov.global_to_local[g]
            if ov.classes[op] == PointClass.GHOST:
                raise ConsistencyError(f"point {g} is a ghost on its owner rank {o}")
            if oV.section.dof_count[op] != sec.dof_count[p]:
                raise ConsistencyError(f"point {g} carries different dof counts on ranks")
            if legacy and sec.constrained[p]:
                continue
            for k, (d, od) in enumerate(zip(sec.dofs(p), oV.section.dofs(op))):
                leaves.append((v.rank, d))
                roots.append((o, od))
    shape = (len(leaves), 2)
    return StarForest(
        np.array(leaves, dtype=np.int64).reshape(shape),
        np.array(roots, dtype=np.int64).reshape(shape),
        tuple(V.dim_total for V in spaces),
        legacy,
    )


def halo_exchange(forest: StarForest, vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Copy root values onto leaves; owned entries are left untouched."""
    if len(vectors) != len(forest.sizes):
        raise ValueError(f"expected {len(forest.sizes)} vectors, got {len(vectors)}")
    for r, (vec, n) in enumerate(zip(vectors, forest.sizes)):
        if np.shape(vec) != (n,):
            raise ValueError(f"rank {r} vector has shape {np.shape(vec)}, expected ({n},)")
    out = [np.array(v, copy=True) for v in vectors]
    for (lr, ld), (rr, rd) in zip(forest.leaves, forest.roots):
        out[lr][ld] = vectors[rr][rd]
    return out


def parallel_global_numbering(
    views: Sequence[RankView], spaces: Sequence[FunctionSpace]
) -> tuple[list[np.ndarray], int]:
    """Local-to-global maps of every rank and the global size.

    Owned unconstrained dofs are numbered rank by rank in local offset
    order; ghost dofs take the owner's index; constrained dofs map to -1.
    """
    first = {}  # global point -> global index of its first dof
    running = 0
    for v, V in zip(views, spaces):
        sec = V.section
        owned = [p for p in range(v.plex.npoints) if v.classes[p] != PointClass.GHOST]
        for p in sorted(owned, key=lambda q: sec.offset[q]):
            if sec.constrained[p] == 0 and sec.dof_count[p] > 0:
                first[int(v.local_to_global[p])] = running
                running += int(sec.dof_count[p])

    lgmaps = []
    for v, V in zip(views, spaces):
        sec = V.section
        goff = np.zeros(v.plex.npoints, dtype=np.int64)
        for p in range(v.plex.npoints):
            if sec.constrained[p] == 0 and sec.dof_count[p] > 0:
                g = int(v.local_to_global[p])
                if g not in first:
                    raise ConsistencyError(f"point {g} has no owner numbering")
                goff[p] = first[g]
        gsec = Section(sec.dof_count.copy(), sec.constrained.copy(), goff)
        lgmaps.append(make_global_numbering(sec, gsec))
    return lgmaps, running


def distributed_solve(
    a: BilinearForm,
    L_per_rank: Sequence[LinearForm],
    views: Sequence[RankView],
    spaces: Sequence[FunctionSpace],
) -> list[np.ndarray]:
    """Solve a homogeneous-bc restricted problem assembled rank by rank.

    Every rank adds the contributions of its owned cells through its
    local-to-global map into one global system.  The solution is returned
    as one local vector per rank, constrained dofs zero.
    """
    lgmaps, n = parallel_global_numbering(views, spaces)
    rows, cols, vals = [], [], []
    b = np.zeros(n)
    for v, V, L, lg in zip(views, spaces, L_per_rank, lgmaps):
        for i in v.owned_cells:
            dofs = lg[V.cell_nodes[i]]
            keep = dofs >= 0
            A = _local_matrix(a, V, int(i))[np.ix_(keep, keep)]
            R, C = np.meshgrid(dofs[keep], dofs[keep], indexing="ij")
            rows.append(R.ravel())
            cols.append(C.ravel())
            vals.append(A.ravel())
            np.add.at(b, dofs[keep], _local_vector(L, V, int(i))[keep])
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    x = linear_solve(mat, b)
    out = []
    for lg in lgmaps:
        loc = np.zeros(len(lg))
        loc[lg >= 0] = x[lg[lg >= 0]]
        out.append(loc)
    return out
