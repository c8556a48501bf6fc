import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restrictfem.elements import lagrange
from restrictfem.errors import ConsistencyError
from restrictfem.numbering import PointClass
from restrictfem.plex import build_unit_square_mesh
from restrictfem.problems import manufactured_poisson, manufactured_source
from restrictfem.ranksim import (
    build_rank_views,
    build_star_forest,
    distributed_solve,
    halo_exchange,
    parallel_global_numbering,
    partition_cells,
    point_owners,
    rank_spaces,
)
from restrictfem.spaces import interpolate, source, stiffness



def setup(nx, ny, nranks, degree=2, boundary=(), overlap=1):
    m = build_unit_square_mesh(nx, ny)
    views = build_rank_views(m, partition_cells(m, nranks), overlap)
    spaces = rank_spaces(views, lagrange("triangle", degree), boundary, m)
    return m, views, spaces


def owned_only(views, spaces, expr):
    out = []
    for v, V in zip(views, spaces):
        vals = interpolate(expr, V).values.copy()
        for p in v.points_of(PointClass.GHOST):
            vals[list(V.section.dofs(p))] = 0.0
        out.append(vals)
    return out


def test_partition_blocks():
    m = build_unit_square_mesh(2, 2)
    assert partition_cells(m, 2).cell_owner.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
    assert partition_cells(m, 3).cell_owner.tolist() == [0, 0, 0, 1, 1, 1, 2, 2]
    with pytest.raises(ValueError):
        partition_cells(m, 0)
    with pytest.raises(ValueError):
        partition_cells(m, 9)


def test_single_rank_is_all_core():
    _, views, spaces = setup(2, 2, 1)
    assert np.all(views[0].classes == PointClass.CORE)
    assert build_star_forest(views, spaces).nleaves == 0


def test_doublet_shared_points_owned_by_rank0():
    m = build_unit_square_mesh(1, 1)
    owner = point_owners(m, partition_cells(m, 2))
    shared = set(m.closure(0)) & set(m.closure(1))
    assert all(owner[p] == 0 for p in shared)


def test_doublet_table_cardinalities():
    _, views, spaces = setup(1, 1, 2, boundary={1, 2})
    v, V = views[1], spaces[1]
    cl, con = v.classes, V.section.constrained > 0
    assert v.plex.npoints == 11
    owned, ghost = cl != PointClass.GHOST, cl == PointClass.GHOST
    assert (owned.sum(), (owned & con).sum()) == (4, 2)
    assert (ghost.sum(), (ghost & con).sum()) == (7, 4)
    lgmaps, n = parallel_global_numbering(views, spaces)
    assert n == 3
    for v, V, lg in zip(views, spaces, lgmaps):
        cdofs = V.section.constrained_dofs()
        assert set(np.flatnonzero(lg == -1)) == set(cdofs)
    assert len(spaces[0].section.constrained_dofs()) == 6


def test_figure_split_sizes():
    _, views, spaces = setup(2, 2, 2, degree=1, overlap=0)
    lg, n = parallel_global_numbering(views, spaces)
    assert [V.dim_total for V in spaces] == [6, 6] and n == 9
    assert sorted(np.concatenate(lg).tolist()) == sorted(list(range(9)) + [3, 4, 5])


def test_ghosts_are_owned_elsewhere():
    m, views, _ = setup(2, 2, 2, degree=1)
    ghost0 = {int(views[0].local_to_global[p]) for p in views[0].points_of(PointClass.GHOST)}
    owned1 = {
        int(views[1].local_to_global[p])
        for p in range(views[1].plex.npoints)
        if views[1].classes[p] != PointClass.GHOST
    }
    assert ghost0 == owned1
    top_row = {v for v in m.vertices if m.coordinates(v)[1] == 1.0}
    ghost_verts = {g for g in ghost0 if m.dim(g) == 0}
    assert ghost_verts == top_row


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_ownership_totality_and_core_soundness(nx, ny, nranks):
    m = build_unit_square_mesh(nx, ny)
    nranks = min(nranks, len(m.cells))
    views = build_rank_views(m, partition_cells(m, nranks))
    owned_by = {}
    for v in views:
        for p in range(v.plex.npoints):
            g = int(v.local_to_global[p])
            if v.classes[p] != PointClass.GHOST:
                assert g not in owned_by
                owned_by[g] = v.rank
            else:
                assert v.owners[p] != v.rank
        for p in v.points_of(PointClass.CORE):
            reach = {q for s in v.plex.star(p) for q in v.plex.closure(s)}
            assert all(v.classes[q] != PointClass.GHOST for q in reach)
    assert set(owned_by) == set(range(m.npoints))


def test_halo_exchange_fixed_forest():
    _, views, spaces = setup(2, 2, 2, boundary={1, 2})
    sf = build_star_forest(views, spaces)
    got = halo_exchange(sf, owned_only(views, spaces, lambda x, y: x))
    for g, V in zip(got, spaces):
        assert np.max(np.abs(g - interpolate(lambda x, y: x, V).values)) == 0.0
    # constrained ghost dofs are leaves
    leaves0 = set(sf.leaves_on(0))
    v, V = views[0], spaces[0]
    con_ghost = [d for p in v.points_of(PointClass.GHOST) if V.section.constrained[p]
                 for d in V.section.dofs(p)]
    assert con_ghost and set(con_ghost) <= leaves0


def test_halo_exchange_legacy_is_stale():
    _, views, spaces = setup(2, 2, 2, boundary={1, 2})
    sf = build_star_forest(views, spaces, legacy=True)
    got = halo_exchange(sf, owned_only(views, spaces, lambda x, y: x))
    stale = sum(int(np.count_nonzero(g != interpolate(lambda x, y: x, V).values))
                for g, V in zip(got, spaces))
    assert stale >= 1


def test_leaf_count_is_ghost_dofs():
    _, views, spaces = setup(2, 2, 2)
    sf = build_star_forest(views, spaces)
    v, V = views[0], spaces[0]
    assert len(sf.leaves_on(0)) == sum(V.section.dof_count[p] for p in v.points_of(PointClass.GHOST))


def test_exchange_idempotent_and_owned_untouched():
    _, views, spaces = setup(3, 2, 3, boundary={2})
    sf = build_star_forest(views, spaces)
    rng = np.random.default_rng(0)
    vecs = [rng.random(V.dim_total) for V in spaces]
    once = halo_exchange(sf, vecs)
    twice = halo_exchange(sf, once)
    for a, b, v, V, x in zip(once, twice, views, spaces, vecs):
        np.testing.assert_array_equal(a, b)
        owned = [d for p in range(v.plex.npoints) if v.classes[p] != PointClass.GHOST
                 for d in V.section.dofs(p)]
        np.testing.assert_array_equal(a[owned], x[owned])


def test_exchange_length_mismatch():
    _, views, spaces = setup(1, 1, 2)
    sf = build_star_forest(views, spaces)
    with pytest.raises(ValueError):
        halo_exchange(sf, [np.zeros(3), np.zeros(3)])
    with pytest.raises(ValueError):
        halo_exchange(sf, [np.zeros(9)])


def test_missing_owner_is_consistency_error():
    _, views, spaces = setup(1, 1, 2)
    views[0].global_to_local.pop(int(views[1].local_to_global[0]))
    with pytest.raises(ConsistencyError):
        build_star_forest(views, spaces)


def test_single_rank_numbering_is_serial():
    m, views, spaces = setup(2, 2, 1, boundary={1, 3})
    lg, n = parallel_global_numbering(views, spaces)
    V = spaces[0]
    np.testing.assert_array_equal(lg[0], V.lgmap)
    assert n == V.dim_free


@pytest.mark.parametrize("nranks", [1, 2, 3])
def test_partition_invariance(nranks):
    m, views, spaces = setup(4, 4, nranks, boundary={1, 2})
    L = [source(interpolate(manufactured_source, V)) for V in spaces]
    xs = distributed_solve(stiffness(), L, views, spaces)
    serial = manufactured_poisson(4, 4, 2, restrict=True, mesh=m).u
    err = 0.0
    for v, V, x in zip(views, spaces, xs):
        for p in range(v.plex.npoints):
            g = int(v.local_to_global[p])
            for a, b in zip(V.section.dofs(p), serial.space.section.dofs(g)):
                err = max(err, abs(x[a] - serial.values[b]))
    assert err <= 1e-10
