import numpy as np
import pytest

from restrictfem.errors import BoundaryMismatchWarning, RestrictEverythingWarning
from restrictfem.plex import build_unit_interval_mesh, build_unit_square_mesh
from restrictfem.spaces import (
    Function,
    advection_x,
    dirichlet_bc,
    dof_permutation,
    form_signature,
    function_space,
    interpolate,
    mass,
    restricted,
    source,
    stiffness,
    transfer,
)


@pytest.fixture
def doublet():
    return build_unit_square_mesh(1, 1)


def test_dimensions(doublet):
    V = function_space(doublet, 4)
    R = restricted(V, {1, 2})
    assert (V.dim_total, V.dim_free, V.dim_constrained) == (25, 25, 0)
    assert (R.dim_total, R.dim_free, R.dim_constrained) == (25, 15, 10)
    assert R.label == "1,2" and V.label == ""
    assert R.restricted and not V.restricted


def test_node_coordinates_match_cells(doublet):
    V = function_space(doublet, 3)
    f = interpolate(lambda x, y: x + 2 * y, V)
    # each cell's nodes lie in that cell and interpolate the linear exactly
    for i in range(2):
        xy = V.node_coordinates[V.cell_nodes[i]]
        np.testing.assert_allclose(f.values[V.cell_nodes[i]], xy[:, 0] + 2 * xy[:, 1])
    assert not np.isnan(V.node_coordinates).any()


def test_shared_edge_dofs_agree(doublet):
    V = function_space(doublet, 3)
    c0, c1 = V.cell_nodes
    assert len(set(c0) & set(c1)) == 4  # two vertices and two edge dofs on the diagonal


def test_restrict_everything_warns(doublet):
    V = function_space(doublet, 1)
    with pytest.warns(RestrictEverythingWarning):
        R = restricted(V, {1, 2, 3, 4})
    assert R.dim_free == 0 and R.restrict_everything


def test_restricted_twice(doublet, quiet):
    R = restricted(function_space(doublet, 1), {1})
    with pytest.raises(ValueError):
        restricted(R, {2})


def test_bc_mismatch_warns(doublet):
    R = restricted(function_space(doublet, 1), {1})
    with pytest.warns(BoundaryMismatchWarning):
        bc = dirichlet_bc(R, 0.0, 3)
    assert bc.mismatch


def test_bc_nodes_and_values(doublet):
    V = function_space(doublet, 2)
    bc = dirichlet_bc(V, lambda x, y: y, 1)
    assert len(bc.nodes) == 3
    np.testing.assert_allclose(sorted(bc.nodal_values()), [0, 0.5, 1])
    assert not bc.homogeneous and dirichlet_bc(V, 0, 2).homogeneous


def test_dimension_mismatch():
    from restrictfem.elements import lagrange
    from restrictfem.spaces import FunctionSpace

    with pytest.raises(ValueError):
        FunctionSpace(build_unit_interval_mesh(2), lagrange("triangle", 1))


def test_function_length_check(doublet):
    with pytest.raises(ValueError):
        Function(function_space(doublet, 1), np.zeros(3))


def test_transfer_roundtrip(doublet):
    V = function_space(doublet, 3)
    R = restricted(V, {2, 3})
    f = interpolate(lambda x, y: np.sin(x) * y, V)
    g = transfer(transfer(f, R), V)
    np.testing.assert_array_equal(f.values, g.values)
    np.testing.assert_allclose(transfer(f, R).values, interpolate(lambda x, y: np.sin(x) * y, R).values)
    perm = dof_permutation(V, R)
    assert sorted(perm) == list(range(V.dim_total))


def test_form_algebra():
    a = stiffness() + 2.0 * mass()
    assert a.terms == ((1.0, "stiffness"), (2.0, "mass"))
    assert (3 * advection_x()).terms == ((3.0, "advection_x"),)
    assert len((source(1.0) + source(2.0)).terms) == 2


def test_form_signature(doublet):
    V = function_space(doublet, 1)
    R = restricted(V, {1})
    E = restricted(V, ())
    a, b = stiffness() + mass(), mass() + stiffness()
    assert form_signature(a, V) == form_signature(b, V)
    assert form_signature(a, V) != form_signature(a, R)
    assert form_signature(a, V, V) == form_signature(a, E, E)
    assert form_signature(mass(), V) != form_signature(2 * mass(), V)
