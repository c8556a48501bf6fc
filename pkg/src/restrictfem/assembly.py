"""Cell kernels and global assembly through local-to-global maps.

Two strategies for Dirichlet conditions are supported:

* restricted spaces: contributions are scattered through the space's
  lgmap and every entry touching a -1 index is dropped, so the matrix has
  ``dim_free`` rows;
* unrestricted spaces with ``bcs``: the bc rows and columns are dropped in
  the same way and a unit diagonal is written on the bc dofs (symmetric
  elimination), keeping ``dim_total`` rows.

Both paths assemble identical entries on the free block.
"""
from __future__ import annotations

from collections.abc import Sequence
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .elements import LagrangeElement, quadrature, tabulate
from .errors import GeometryError
from .numbering import lgmap_with_bcs
from .spaces import (
    ADVECTION_X,
    MASS,
    STIFFNESS,
    BilinearForm,
    DirichletBC,
    Function,
    FunctionSpace,
    LinearForm,
    Source,
    _evaluate,
)

__all__ = [
    "element_kernel",
    "assemble_bilinear",
    "assemble_local",
    "assemble_linear",
    "bc_values",
    "l2_norm",
    "errornorm",
    "l2_difference",
]


@lru_cache(maxsize=None)
def _tabulated(element: LagrangeElement, precision: int):
    rule = quadrature(element.cell, precision)
    vals, grads = tabulate(element, rule.points)
    return rule, vals, grads


def _geometry(cell_vertices: np.ndarray):
    X = np.asarray(cell_vertices, dtype=float)
    J = (X[1:] - X[0]).T
    if J.shape[0] != J.shape[1]:
        raise GeometryError("embedded cells are not supported")
    det = float(np.linalg.det(J))
    if abs(det) < 1e-14 * max(1.0, np.abs(J).max()) ** J.shape[0]:
        raise GeometryError(f"degenerate cell with vertices {X.tolist()}")
    return X[0], J, abs(det), np.linalg.inv(J)


def element_kernel(
    kernel: str | Source,
    element: LagrangeElement,
    cell_vertices,
    precision: int | None = None,
) -> np.ndarray:
    """Local matrix of a bilinear kernel, or local vector of a :class:`Source`.

    ``cell_vertices`` are the physical vertex coordinates in the element's
    local vertex order.  Rows index test functions, columns trial functions.
    """
    origin, J, det, Jinv = _geometry(cell_vertices)
    precision = 2 * element.degree if precision is None else precision
    rule, phi, dphi = _tabulated(element, precision)
    w = rule.weights * det
    if isinstance(kernel, Source):
        if isinstance(kernel.coefficient, Function):
            raise TypeError("Function coefficients need the space's cell map; use assemble_linear")
        fq = _evaluate(kernel.coefficient, origin + rule.points @ J.T)
        return phi.T @ (w * fq)
    if kernel == MASS:
        return np.einsum("q,qi,qj->ij", w, phi, phi)
    grad = np.einsum("qnd,de->qne", dphi, Jinv)
    if kernel == STIFFNESS:
        return np.einsum("q,qid,qjd->ij", w, grad, grad)
    if kernel == ADVECTION_X:
        return np.einsum("q,qi,qj->ij", w, phi, grad[:, :, 0])
    raise ValueError(f"unknown kernel {kernel!r}")


def _local_matrix(form: BilinearForm, space: FunctionSpace, i: int) -> np.ndarray:
    X = space.cell_geometry(i)
    out = 0.0
    for w, k in form.terms:
        out = out + w * element_kernel(k, space.element, X)
    return np.asarray(out)


def _local_vector(form: LinearForm, space: FunctionSpace, i: int) -> np.ndarray:
    el = space.element
    X = space.cell_geometry(i)
    out = np.zeros(el.space_dimension)
    for w, src in form.terms:
        coeff = src.coefficient
        if isinstance(coeff, Function):
            if coeff.space.mesh is not space.mesh:
                raise ValueError("coefficient lives on a different mesh")
            cel = coeff.space.element
            precision = el.degree + cel.degree
            origin, J, det, _ = _geometry(X)
            rule = quadrature(el.cell, precision)
            phi, _ = tabulate(el, rule.points)
            cphi, _ = tabulate(cel, rule.points)
            fq = cphi @ coeff.values[coeff.space.cell_nodes[i]]
            out += w * (phi.T @ (rule.weights * det * fq))
        else:
            out += w * element_kernel(src, el, X)
    return out


def _check_pair(test: FunctionSpace, trial: FunctionSpace) -> None:
    if test.mesh is not trial.mesh:
        raise ValueError("test and trial spaces live on different meshes")
    if test.restricted != trial.restricted:
        raise ValueError("cannot mix restricted and unrestricted argument spaces")


def _bc_dofs(space: FunctionSpace, bcs: Sequence[DirichletBC]) -> np.ndarray:
    nodes = [bc.nodes if bc.space is space else bc.reconstruct(space).nodes for bc in bcs]
    return np.unique(np.concatenate(nodes)) if nodes else np.empty(0, dtype=np.int64)


def _scatter(form, test, trial, rmap, cmap, shape) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for i in range(len(test.mesh.cells)):
        A = _local_matrix(form, test, i)
        r = rmap[test.cell_nodes[i]]
        c = cmap[trial.cell_nodes[i]]
        keep_r, keep_c = r >= 0, c >= 0
        R, C = np.meshgrid(r[keep_r], c[keep_c], indexing="ij")
        rows.append(R.ravel())
        cols.append(C.ravel())
        vals.append(A[np.ix_(keep_r, keep_c)].ravel())
    rows = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    vals = np.concatenate(vals) if vals else np.empty(0)
    # symbolic pass fixes the sparsity, numeric pass sums contributions
    mat = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_bilinear(
    form: BilinearForm,
    test_space: FunctionSpace,
    trial_space: FunctionSpace | None = None,
    bcs: Sequence[DirichletBC] = (),
) -> sp.csr_matrix:
    """Assemble ``form`` into a CSR matrix.

    Restricted spaces give a ``dim_free x dim_free`` matrix and ignore
    ``bcs``.  Unrestricted spaces give ``dim_total x dim_total`` with bc
    rows and columns replaced by the identity.
    """
    trial_space = test_space if trial_space is None else trial_space
    _check_pair(test_space, trial_space)
    if test_space.restricted:
        shape = (test_space.dim_free, trial_space.dim_free)
        return _scatter(form, test_space, trial_space, test_space.lgmap, trial_space.lgmap, shape)

    rbc = _bc_dofs(test_space, bcs)
    cbc = _bc_dofs(trial_space, bcs)
    rmap = lgmap_with_bcs(test_space.section, rbc)
    cmap = lgmap_with_bcs(trial_space.section, cbc)
    shape = (test_space.dim_total, trial_space.dim_total)
    mat = _scatter(form, test_space, trial_space, rmap, cmap, shape)
    if len(rbc):
        diag = np.intersect1d(rbc, cbc)
        mat = (mat + sp.coo_matrix((np.ones(len(diag)), (diag, diag)), shape=shape)).tocsr()
        mat.sort_indices()
    return mat


def assemble_local(
    form: BilinearForm, test_space: FunctionSpace, trial_space: FunctionSpace | None = None
) -> sp.csr_matrix:
    """Matrix over every local dof, ignoring constraints and boundary conditions."""
    trial_space = test_space if trial_space is None else trial_space
    ident_r = np.arange(test_space.dim_total)
    ident_c = np.arange(trial_space.dim_total)
    shape = (test_space.dim_total, trial_space.dim_total)
    return _scatter(form, test_space, trial_space, ident_r, ident_c, shape)


def bc_values(space: FunctionSpace, bcs: Sequence[DirichletBC]) -> np.ndarray:
    """Local vector holding ``g`` at bc dofs and zero elsewhere.

    Later conditions overwrite earlier ones on shared nodes.
    """
    g = np.zeros(space.dim_total)
    for bc in bcs:
        bc = bc if bc.space is space else bc.reconstruct(space)
        g[bc.nodes] = bc.nodal_values()
    return g


def assemble_linear(
    form: LinearForm,
    space: FunctionSpace,
    bcs: Sequence[DirichletBC] = (),
    lift_matrix: sp.spmatrix | None = None,
) -> np.ndarray:
    """Assemble a load vector consistent with :func:`assemble_bilinear`.

    ``lift_matrix`` is the operator over all local dofs of ``space`` (see
    :func:`assemble_local`); it is needed to move inhomogeneous boundary
    values to the right-hand side, ``b_free -= A[free, bc] g``.
    """
    b = np.zeros(space.dim_total)
    for i in range(len(space.mesh.cells)):
        np.add.at(b, space.cell_nodes[i], _local_vector(form, space, i))

    g = bc_values(space, bcs)
    if space.restricted:
        g[space.lgmap >= 0] = 0.0
    if np.any(g != 0.0):
        if lift_matrix is None:
            raise ValueError("inhomogeneous boundary conditions need lift_matrix")
        if lift_matrix.shape != (space.dim_total, space.dim_total):
            raise ValueError("lift_matrix must cover every local dof of the space")
        b = b - lift_matrix @ g

    if space.restricted:
        out = np.zeros(space.dim_free)
        free = space.lgmap >= 0
        np.add.at(out, space.lgmap[free], b[free])
        return out
    nodes = _bc_dofs(space, bcs)
    b[nodes] = g[nodes]
    return b


def _integrate(space: FunctionSpace, integrand_at) -> float:
    """Sum over cells of ``integrand_at(i, xq, phi) . weights``."""
    el = space.element
    rule = quadrature(el.cell, 2 * el.degree + 4)
    phi, _ = tabulate(el, rule.points)
    total = 0.0
    for i in range(len(space.mesh.cells)):
        origin, J, det, _ = _geometry(space.cell_geometry(i))
        xq = origin + rule.points @ J.T
        total += float(np.dot(rule.weights * det, integrand_at(i, xq, phi)))
    return total


def l2_norm(f: Function) -> float:
    V = f.space
    return float(np.sqrt(_integrate(V, lambda i, xq, phi: (phi @ f.values[V.cell_nodes[i]]) ** 2)))


def errornorm(exact, f: Function) -> float:
    """L2 norm of ``exact - f`` where ``exact`` is an expression of the coordinates."""
    V = f.space

    def sq(i, xq, phi):
        return (_evaluate(exact, xq) - phi @ f.values[V.cell_nodes[i]]) ** 2

    return float(np.sqrt(_integrate(V, sq)))


def l2_difference(f: Function, g: Function) -> float:
    """L2 norm of ``f - g`` for functions on two numberings of one mesh and element."""
    from .spaces import transfer

    g_on_f = transfer(g, f.space) if g.space is not f.space else g
    return l2_norm(Function(f.space, f.values - g_on_f.values))
