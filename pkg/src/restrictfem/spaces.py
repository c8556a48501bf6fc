"""Function spaces, functions, Dirichlet conditions and the kernel form algebra.

A :class:`FunctionSpace` couples a mesh with a Lagrange element.  Giving
it a non-empty ``boundary_set`` makes it *restricted*: every dof on those
subdomains is marked constrained, renumbered to the tail of the owned
block and mapped to -1 by the local-to-global map, so assembled operators
only see the free dofs.  With an empty boundary set a restricted space is
indistinguishable from the unrestricted one.

Forms are a closed algebra of kernels (mass, stiffness, x-advection and a
source term) rather than a general symbolic language::

    a = stiffness() + 2.0 * mass()
    L = source(f)
"""
from __future__ import annotations

import warnings
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from typing import Union

import numpy as np

from .elements import LagrangeElement, lagrange
from .errors import BoundaryMismatchWarning, RestrictEverythingWarning
from .numbering import (
    PointClass,
    create_section,
    make_global_numbering,
    serial_global_section,
)
from .plex import Plex, boundary_points

__all__ = [
    "FunctionSpace",
    "Function",
    "DirichletBC",
    "BilinearForm",
    "LinearForm",
    "Source",
    "function_space",
    "restricted",
    "interpolate",
    "dirichlet_bc",
    "mass",
    "stiffness",
    "advection_x",
    "source",
    "form_signature",
    "dof_permutation",
    "transfer",
]

Expr = Union[float, int, Callable[..., np.ndarray]]

MASS = "mass"
STIFFNESS = "stiffness"
ADVECTION_X = "advection_x"
KERNELS = (MASS, STIFFNESS, ADVECTION_X)


class FunctionSpace:
    """Scalar Lagrange space on a plex, optionally restricted by a boundary set.

    Parameters
    ----------
    mesh : Plex
    element : LagrangeElement
    boundary_set : iterable of int, optional
        Subdomain ids whose dofs are constrained.  Empty means unrestricted.
    classes : sequence of PointClass, optional
        Per-point core/owned/ghost classes; all owned when omitted.
    constrained_points : iterable of int, optional
        Points to constrain instead of those found from ``boundary_set``.
    """

    def __init__(
        self,
        mesh: Plex,
        element: LagrangeElement,
        boundary_set: Iterable[int] = (),
        classes=None,
        constrained_points=None,
    ):
        if element.tdim != mesh.tdim:
            raise ValueError(
                f"{element.id} has dimension {element.tdim} but the mesh has {mesh.tdim}"
            )
        self.mesh = mesh
        self.element = element
        self.boundary_set = frozenset(int(b) for b in boundary_set)
        self.classes = (
            np.full(mesh.npoints, PointClass.OWNED, dtype=np.int64)
            if classes is None
            else np.asarray(classes, dtype=np.int64)
        )
        self.section, self.constrained_nodes = create_section(
            mesh, self.classes, element.dofs_per_dim(), self.boundary_set, constrained_points
        )
        self.global_section = serial_global_section(self.section)
        self.lgmap = make_global_numbering(self.section, self.global_section)
        self.lgmap.setflags(write=False)
        self.label = ",".join(str(b) for b in sorted(self.boundary_set))

        owned_pts = self.classes != PointClass.GHOST
        node_set_size = int(self.section.dof_count[owned_pts].sum())
        # scalar Lagrange: one dof per node
        self.dim_total = self.section.total_dofs
        self.dim_constrained = self.section.total_constrained
        self.dim_free = node_set_size - self.constrained_nodes

        self.cell_nodes = self._build_cell_nodes()
        self.cell_nodes.setflags(write=False)
        self.node_coordinates = self._build_node_coordinates()
        self.node_coordinates.setflags(write=False)

        self.restrict_everything = self.restricted and self.dim_free == 0
        if self.restrict_everything:
            warnings.warn(
                f"boundary set {sorted(self.boundary_set)} constrains every degree of "
                "freedom; there is nothing left to solve for",
                RestrictEverythingWarning,
                stacklevel=3,
            )

    # -- structure ----------------------------------------------------------
    @property
    def restricted(self) -> bool:
        return bool(self.boundary_set)

    @property
    def free_dofs(self) -> np.ndarray:
        """Local dofs with a non-negative global index."""
        return np.flatnonzero(self.lgmap >= 0)

    def _entity_points(self, c: int) -> dict[tuple[int, int], int]:
        mesh = self.mesh
        verts = mesh.cell_vertices(c)
        out = {(0, i): v for i, v in enumerate(verts)}
        if mesh.tdim == 1:
            out[(1, 0)] = c
            return out
        by_verts = {frozenset(mesh.cone(e)): e for e in mesh.cone(c)}
        for k in range(3):
            others = frozenset(v for i, v in enumerate(verts) if i != k)
            out[(1, k)] = by_verts[others]
        out[(2, 0)] = c
        return out

    def _build_cell_nodes(self) -> np.ndarray:
        el = self.element
        cells = self.mesh.cells
        out = np.empty((len(cells), el.space_dimension), dtype=np.int64)
        for i, c in enumerate(cells):
            for key, p in self._entity_points(int(c)).items():
                ids = el.entity_dofs[key]
                out[i, list(ids)] = list(self.section.dofs(p))
        return out

    def cell_geometry(self, i: int) -> np.ndarray:
        """Vertex coordinates of the ``i``-th cell, in local vertex order."""
        return self.mesh.vertex_coordinates(self.mesh.cell_vertices(int(self.mesh.cells[i])))

    def _build_node_coordinates(self) -> np.ndarray:
        el = self.element
        out = np.full((self.dim_total, self.mesh.gdim), np.nan)
        for i in range(len(self.mesh.cells)):
            X = self.cell_geometry(i)
            J = (X[1:] - X[0]).T
            out[self.cell_nodes[i]] = X[0] + el.nodes @ J.T
        return out

    def __repr__(self) -> str:
        kind = f"restricted[{self.label}]" if self.restricted else "unrestricted"
        return f"FunctionSpace({self.mesh.name}, {self.element.id}, {kind})"


def function_space(mesh: Plex, element: LagrangeElement | int) -> FunctionSpace:
    """Unrestricted space; an integer ``element`` means Lagrange of that degree."""
    if isinstance(element, int):
        element = lagrange("interval" if mesh.tdim == 1 else "triangle", element)
    return FunctionSpace(mesh, element)


def restricted(base: FunctionSpace, boundary_set: Iterable[int]) -> FunctionSpace:
    """Restricted copy of ``base`` with dofs on ``boundary_set`` constrained."""
    if base.restricted:
        raise ValueError("base space is already restricted")
    return FunctionSpace(base.mesh, base.element, boundary_set, base.classes)


class Function:
    """Coefficient vector over all local dofs of a space (constrained included)."""

    def __init__(self, space: FunctionSpace, values=None, name: str = "f"):
        self.space = space
        self.name = name
        if values is None:
            self.values = np.zeros(space.dim_total)
        else:
            values = np.asarray(values)
            if np.iscomplexobj(values) and not np.any(values.imag):
                values = values.real
            values = values.astype(complex if np.iscomplexobj(values) else float)
            if values.shape != (space.dim_total,):
                raise ValueError(f"expected {space.dim_total} values, got {values.shape}")
            self.values = values.copy()

    def copy(self) -> "Function":
        return Function(self.space, self.values, self.name)

    def __repr__(self) -> str:
        return f"Function({self.name!r}, {self.space!r})"


def _evaluate(expr: Expr, points: np.ndarray) -> np.ndarray:
    if callable(expr):
        vals = expr(*points.T)
        return np.broadcast_to(np.asarray(vals, dtype=float), (len(points),)).copy()
    return np.full(len(points), float(expr))


def interpolate(expr: Expr, space: FunctionSpace) -> Function:
    """Nodal interpolant: ``values[d] = expr(node coordinate of d)`` for every dof."""
    return Function(space, _evaluate(expr, space.node_coordinates))


class DirichletBC:
    """Prescribed value ``u = g`` on one boundary subdomain."""

    def __init__(self, space: FunctionSpace, value: Expr, subdomain: int):
        self.space = space
        self.value = value
        self.subdomain = int(subdomain)
        self.mismatch = space.restricted and self.subdomain not in space.boundary_set
        if self.mismatch:
            warnings.warn(
                f"boundary condition on subdomain {self.subdomain} is outside the "
                f"boundary set {sorted(space.boundary_set)} of the restricted space",
                BoundaryMismatchWarning,
                stacklevel=3,
            )
        sec = space.section
        pts = boundary_points(space.mesh, {self.subdomain})
        self.nodes = np.array(sorted(d for p in pts for d in sec.dofs(p)), dtype=np.int64)

    def nodal_values(self) -> np.ndarray:
        """``g`` at each bc node, in the order of :attr:`nodes`."""
        return _evaluate(self.value, self.space.node_coordinates[self.nodes])

    @property
    def homogeneous(self) -> bool:
        return not callable(self.value) and float(self.value) == 0.0

    def reconstruct(self, space: FunctionSpace) -> "DirichletBC":
        return DirichletBC(space, self.value, self.subdomain)

    def __repr__(self) -> str:
        return f"DirichletBC(subdomain={self.subdomain}, value={self.value!r})"


def dirichlet_bc(space: FunctionSpace, value: Expr, subdomain: int) -> DirichletBC:
    return DirichletBC(space, value, subdomain)


# -- forms --------------------------------------------------------------------
@dataclass(frozen=True)
class BilinearForm:
    """Weighted sum of bilinear kernels; ``terms`` holds ``(weight, kernel)`` pairs."""

    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        for _, k in self.terms:
            if k not in KERNELS:
                raise ValueError(f"unknown kernel {k!r}")

    def __add__(self, other: "BilinearForm") -> "BilinearForm":
        return BilinearForm(self.terms + other.terms)

    def __rmul__(self, w: float) -> "BilinearForm":
        return BilinearForm(tuple((w * a, k) for a, k in self.terms))

    __mul__ = __rmul__


@dataclass(frozen=True, eq=False)
class Source:
    """Load term ``int f v``; ``f`` is a Function, an expression of the coordinates or a constant."""

    coefficient: Union[Function, Expr]
    name: str = "f"


@dataclass(frozen=True)
class LinearForm:
    terms: tuple[tuple[float, Source], ...]

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.terms + other.terms)

    def __rmul__(self, w: float) -> "LinearForm":
        return LinearForm(tuple((w * a, s) for a, s in self.terms))

    __mul__ = __rmul__


def mass() -> BilinearForm:
    return BilinearForm(((1.0, MASS),))


def stiffness() -> BilinearForm:
    return BilinearForm(((1.0, STIFFNESS),))


def advection_x() -> BilinearForm:
    """``int v du/dx``: test function times x-derivative of the trial function."""
    return BilinearForm(((1.0, ADVECTION_X),))


def source(f, name: str = "f") -> LinearForm:
    return LinearForm(((1.0, Source(f, name)),))


def form_signature(
    form: BilinearForm | LinearForm,
    test_space: FunctionSpace,
    trial_space: FunctionSpace | None = None,
) -> str:
    """Deterministic cache key for assembling ``form`` on the given spaces.

    Kernel terms are sorted so the key does not depend on summation order;
    the space labels make restricted and unrestricted assemblies distinct.
    """
    if isinstance(form, BilinearForm):
        terms = sorted((k, float(w).hex()) for w, k in form.terms)
        kind = "bilinear"
    else:
        terms = sorted((s.name, float(w).hex()) for w, s in form.terms)
        kind = "linear"
    parts = [
        kind,
        ";".join(f"{k}*{w}" for k, w in terms),
        test_space.element.id,
        test_space.mesh.name,
        f"test[{test_space.label}]",
    ]
    if trial_space is not None:
        parts += [trial_space.element.id, f"trial[{trial_space.label}]"]
    return "|".join(parts)


def dof_permutation(src: FunctionSpace, dst: FunctionSpace) -> np.ndarray:
    """``perm[d]`` is the dof of ``dst`` sitting on the same node as dof ``d`` of ``src``."""
    if src.mesh is not dst.mesh or src.element is not dst.element:
        raise ValueError("spaces must share mesh and element")
    perm = np.empty(src.dim_total, dtype=np.int64)
    for p in range(src.mesh.npoints):
        perm[list(src.section.dofs(p))] = list(dst.section.dofs(p))
    return perm


def transfer(f: Function, space: FunctionSpace) -> Function:
    """Re-express ``f`` on another numbering of the same mesh and element."""
    vals = np.zeros(space.dim_total, dtype=f.values.dtype)
    vals[dof_permutation(f.space, space)] = f.values
    return Function(space, vals, f.name)
