import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restrictfem.elements import lagrange
from restrictfem.errors import ConsistencyError
from restrictfem.numbering import (
    PointClass,
    Section,
    create_section,
    lgmap_with_bcs,
    make_global_numbering,
    plex_renumbering,
    serial_global_section,
)
from restrictfem.plex import boundary_points, build_unit_square_mesh

boundary_sets = st.sets(st.integers(1, 4), max_size=4)


def test_renumbering_pushes_constrained_to_tail():
    m = build_unit_square_mesh(1, 1)
    cpts = boundary_points(m, {1})
    perm, (start, end) = plex_renumbering(m, constrained_points=cpts)
    assert (start, end) == (8, 11)
    assert sorted(perm[cpts]) == [8, 9, 10]
    # stable: unconstrained points keep their relative order
    free = [p for p in range(11) if p not in cpts]
    assert list(perm[free]) == list(range(8))


def test_renumbering_order_by_class():
    m = build_unit_square_mesh(1, 1)
    classes = np.full(11, PointClass.OWNED)
    classes[[0, 3]] = PointClass.GHOST
    classes[[1]] = PointClass.CORE
    perm, (start, end) = plex_renumbering(m, classes, constrained_points=[2, 3])
    order = np.argsort(perm)
    assert order[0] == 1  # core first
    assert list(order[-2:]) == [0, 3]  # ghosts last, constrained ghost included
    assert order[end - 1] == 2 and end - start == 1


@given(st.integers(1, 3), st.integers(1, 3), st.sampled_from([1, 2, 3]), boundary_sets)
def test_section_offsets_partition_dofs(nx, ny, k, bset):
    m = build_unit_square_mesh(nx, ny)
    sec, ncon = create_section(m, None, lagrange("triangle", k).dofs_per_dim(), bset)
    dofs = sorted(d for p in range(m.npoints) for d in sec.dofs(p))
    assert dofs == list(range(sec.total_dofs))
    assert ncon == sec.total_constrained
    # constrained dofs sit in a contiguous tail block
    con = sec.constrained_dofs()
    assert list(con) == list(range(sec.total_dofs - len(con), sec.total_dofs))


@given(st.integers(1, 3), st.sampled_from([1, 2, 4]), boundary_sets)
def test_lgmap_structure(n, k, bset):
    m = build_unit_square_mesh(n, n)
    sec, ncon = create_section(m, None, lagrange("triangle", k).dofs_per_dim(), bset)
    lg = make_global_numbering(sec, serial_global_section(sec))
    nfree = sec.total_dofs - ncon
    np.testing.assert_array_equal(lg[:nfree], np.arange(nfree))
    assert np.all(lg[nfree:] == -1)


def test_lgmap_degree4_doublet():
    m = build_unit_square_mesh(1, 1)
    sec, _ = create_section(m, None, (1, 3, 3), {1, 2})
    lg = make_global_numbering(sec, serial_global_section(sec))
    assert lg.tolist() == list(range(15)) + [-1] * 10


def test_empty_boundary_set_matches_unrestricted():
    m = build_unit_square_mesh(2, 2)
    a, _ = create_section(m, None, (1, 1, 0), ())
    b, _ = create_section(m, None, (1, 1, 0))
    assert a.same_as(b)


def test_make_global_numbering_mismatch():
    m = build_unit_square_mesh(1, 1)
    a, _ = create_section(m, None, (1, 0, 0), {1})
    b, _ = create_section(m, None, (1, 0, 0), {2})
    with pytest.raises(ConsistencyError):
        make_global_numbering(a, serial_global_section(b))
    short = Section(np.ones(3, int), np.zeros(3, int), np.arange(3))
    with pytest.raises(ConsistencyError):
        make_global_numbering(a, short)


def test_lgmap_with_bcs():
    m = build_unit_square_mesh(1, 1)
    sec, _ = create_section(m, None, (1, 0, 0))
    assert lgmap_with_bcs(sec, [0, 2]).tolist() == [-1, 1, -1, 3]
    with pytest.raises(IndexError):
        lgmap_with_bcs(sec, [4])
    rsec, _ = create_section(m, None, (1, 0, 0), {1})
    with pytest.raises(ValueError):
        lgmap_with_bcs(rsec, [0])


def test_negative_dof_count():
    with pytest.raises(ValueError):
        create_section(build_unit_square_mesh(1, 1), None, (1, -1, 0))
