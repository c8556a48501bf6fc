"""Dof sections, constrained-aware point renumbering and local-to-global maps.

A :class:`Section` gives every plex point a dof count, a constrained dof
count and the offset of its first dof in the local vector.  Offsets are
handed out in the order produced by :func:`plex_renumbering`, which sorts
points by the key

    core & free  <  owned & free  <  core/owned & constrained  <  ghost

so constrained dofs form a contiguous block at the tail of the owned
range and can be cut off when sizing global objects.
"""
from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError
from .plex import Plex, boundary_points

__all__ = [
    "PointClass",
    "Section",
    "plex_renumbering",
    "create_section",
    "serial_global_section",
    "make_global_numbering",
    "lgmap_with_bcs",
]


class PointClass(enum.IntEnum):
    CORE = 0
    OWNED = 1
    GHOST = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True, eq=False)
class Section:
    """Per-point dof layout.

    Attributes
    ----------
    dof_count, constrained, offset : ndarray of int, shape (npoints,)
    permutation : ndarray of int or None
        New position of each point in the renumbered order, if the section
        was built by :func:`create_section`.
    """

    dof_count: np.ndarray
    constrained: np.ndarray
    offset: np.ndarray
    permutation: np.ndarray | None = None

    def __post_init__(self):
        for arr in (self.dof_count, self.constrained, self.offset):
            arr.setflags(write=False)

    @property
    def chart(self) -> tuple[int, int]:
        return 0, len(self.dof_count)

    @property
    def total_dofs(self) -> int:
        return int(self.dof_count.sum())

    @property
    def total_constrained(self) -> int:
        return int(self.constrained.sum())

    def dofs(self, p: int) -> range:
        return range(int(self.offset[p]), int(self.offset[p] + self.dof_count[p]))

    def constrained_dofs(self) -> np.ndarray:
        """Local dof indices of all constrained dofs, ascending."""
        out = [np.arange(o, o + c) for o, c in zip(self.offset, self.constrained) if c]
        return np.sort(np.concatenate(out)) if out else np.empty(0, dtype=np.int64)

    def same_as(self, other: "Section") -> bool:
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("dof_count", "constrained", "offset")
        )


_RANK_NAMES = ("core", "owned", "constrained", "ghost")


def _sort_rank(cls: int, constrained: bool) -> int:
    if cls == PointClass.GHOST:
        return 3
    if constrained:
        return 2
    return int(cls)


def plex_renumbering(
    plex: Plex,
    classes: Sequence[int] | None = None,
    constrained_points: Iterable[int] = (),
) -> tuple[np.ndarray, tuple[int, int]]:
    """Stable sort of the chart by class and constrained status.

    Returns
    -------
    permutation : ndarray
        ``permutation[p]`` is the new position of point ``p``.
    constrained_block : (int, int)
        Half-open range of new positions holding constrained core/owned points.
    """
    n = plex.npoints
    classes = _default_classes(n, classes)
    cset = set(constrained_points)
    ranks = np.array([_sort_rank(classes[p], p in cset) for p in range(n)], dtype=np.int64)
    order = np.argsort(ranks, kind="stable")
    permutation = np.empty(n, dtype=np.int64)
    permutation[order] = np.arange(n)
    start = int(np.count_nonzero(ranks < 2))
    end = start + int(np.count_nonzero(ranks == 2))
    return permutation, (start, end)


def _default_classes(n: int, classes) -> np.ndarray:
    if classes is None:
        return np.full(n, PointClass.OWNED, dtype=np.int64)
    classes = np.asarray(classes, dtype=np.int64)
    if len(classes) != n:
        raise ValueError(f"expected {n} point classes, got {len(classes)}")
    return classes


def create_section(
    plex: Plex,
    classes: Sequence[int] | None,
    dofs_per_dim: Sequence[int],
    boundary_set: Iterable[int] = (),
    constrained_points: Iterable[int] | None = None,
) -> tuple[Section, int]:
    """Lay out dofs over the plex, constrained points last among owned points.

    Every dof of a point in the closure of a facet labelled by an id in
    ``boundary_set`` is constrained.  ``constrained_points`` replaces that
    lookup when the caller already knows the points, e.g. a rank view whose
    local plex lacks some boundary facets.

    Returns
    -------
    section : Section
    constrained_nodes : int
        Number of constrained dofs on core/owned points.  For scalar
        Lagrange spaces each dof is one node.
    """
    if any(d < 0 for d in dofs_per_dim):
        raise ValueError("dof counts must be non-negative")
    n = plex.npoints
    classes = _default_classes(n, classes)
    boundary_set = set(boundary_set)
    if constrained_points is not None:
        cpts = sorted(set(int(p) for p in constrained_points))
    else:
        cpts = boundary_points(plex, boundary_set) if boundary_set else []
    permutation, _ = plex_renumbering(plex, classes, cpts)

    dof_count = np.array([dofs_per_dim[d] for d in plex.dims], dtype=np.int64)
    constrained = np.zeros(n, dtype=np.int64)
    constrained[cpts] = dof_count[cpts]

    order = np.argsort(permutation)
    offset = np.zeros(n, dtype=np.int64)
    offset[order] = np.concatenate([[0], np.cumsum(dof_count[order])[:-1]]) if n else []
    owned = classes != PointClass.GHOST
    nodes = int(constrained[owned].sum())
    return Section(dof_count, constrained, offset, permutation), nodes


def serial_global_section(local: Section) -> Section:
    """Global section for a single process: constrained dofs take no global slot.

    Unconstrained dofs are numbered consecutively in local offset order.
    Constrained points get the running count as a (never read) offset.
    """
    order = np.argsort(local.offset, kind="stable")
    goff = np.zeros_like(local.offset)
    running = 0
    for p in order:
        goff[p] = running
        if local.constrained[p] == 0:
            running += int(local.dof_count[p])
    return Section(local.dof_count.copy(), local.constrained.copy(), goff)


def make_global_numbering(local_sec: Section, global_sec: Section) -> np.ndarray:
    """Local-to-global dof indices with -1 at constrained dofs."""
    if local_sec.chart != global_sec.chart:
        raise ConsistencyError("local and global sections have different charts")
    if not np.array_equal(local_sec.dof_count, global_sec.dof_count) or not np.array_equal(
        local_sec.constrained, global_sec.constrained
    ):
        raise ConsistencyError("local and global sections disagree on dof counts")
    val = np.empty(local_sec.total_dofs, dtype=np.int64)
    for p in range(*local_sec.chart):
        dofs = int(local_sec.dof_count[p])
        if dofs == 0:
            continue
        cdofs = int(local_sec.constrained[p])
        loff = int(local_sec.offset[p])
        goff = int(global_sec.offset[p])
        if cdofs > 0:
            for c in range(cdofs):
                val[loff + c] = -1
        else:
            for c in range(dofs):
                val[loff + c] = abs(goff) + c
    return val


def lgmap_with_bcs(section: Section, bc_dofs: Iterable[int]) -> np.ndarray:
    """Identity map over an unrestricted section with -1 at ``bc_dofs``."""
    if section.total_constrained:
        raise ValueError("lgmap_with_bcs expects an unrestricted section")
    n = section.total_dofs
    val = np.arange(n, dtype=np.int64)
    bc = np.fromiter(bc_dofs, dtype=np.int64)
    if bc.size and (bc.min() < 0 or bc.max() >= n):
        raise IndexError(f"boundary dof outside [0, {n})")
    val[bc] = -1
    return val
