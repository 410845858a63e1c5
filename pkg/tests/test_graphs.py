import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutwalk.graphs import (
    CapacityError,
    FreeGroup,
    Heisenberg,
    InvalidVertexError,
    Lattice,
    LatticeCrossFinite,
    OrbitDeclarationError,
    ball_size,
    ball_sizes,
    cycle_graph,
    pack_rows,
    path_graph,
)

from conftest import FAMILIES, bfs_ball_sizes


def test_ball_sizes_match_plain_bfs(family):
    n = 6 if family.d_max <= 8 else 4
    assert ball_sizes(family, None, n) == bfs_ball_sizes(family, family.origin, n)


@pytest.mark.parametrize("name", ["lcf1_path3", "lcf3_path3"])
def test_ball_sizes_off_origin_orbit(name):
    spec = FAMILIES[name]
    rep = spec.orbit_representative(1)
    assert ball_sizes(spec, rep, 5) == bfs_ball_sizes(spec, rep, 5)


def test_lattice_ball_closed_forms():
    # |B(n)| in Z^2 is 2n^2 + 2n + 1; in Z^3 the octahedral numbers
    sizes2 = ball_sizes(Lattice(2), None, 30)
    assert sizes2 == [2 * n * n + 2 * n + 1 for n in range(31)]
    sizes3 = ball_sizes(Lattice(3), None, 20)
    assert sizes3 == [(2 * n + 1) * (2 * n * n + 2 * n + 3) // 3 for n in range(21)]


def test_free_group_ball_exact():
    r = 3
    sizes = ball_sizes(FreeGroup(r), None, 10)
    expect = [1 + sum(2 * r * (2 * r - 1) ** (k - 1) for k in range(1, n + 1)) for n in range(11)]
    assert sizes == expect


def test_ball_size_scalar():
    assert ball_size(Lattice(1), None, 7) == 15


def test_capacity_error():
    with pytest.raises(CapacityError):
        ball_sizes(Heisenberg(), None, 40, max_states=1000)


def test_neighbors_are_symmetric(family):
    v = family.origin
    for u in family.neighbors(v):
        assert v in family.neighbors(u)
    assert family.degree(v) == len(family.neighbors(v))


def test_heisenberg_group_law():
    h = Heisenberg()
    nb = set(h.neighbors((0, 0, 0)))
    assert nb == {(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)}
    # commutator a b a^-1 b^-1 is the central generator
    v = (0, 0, 0)
    for step in ((1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0)):
        cand = [u for u in h.neighbors(v) if (u[0] - v[0], u[1] - v[1]) == step[:2]]
        v = cand[0]
    assert abs(v[2]) == 1 and v[:2] == (0, 0)


@given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=30))
def test_free_group_words_stay_reduced(letters):
    w = ()
    for a in letters:
        w = FreeGroup.multiply(w, a)
        assert all(x != -y for x, y in zip(w, w[1:]))
    # multiply by the inverse word returns to the identity
    for a in reversed(letters):
        w = FreeGroup.multiply(w, -a)
    assert w == ()


def test_invalid_vertices():
    with pytest.raises(InvalidVertexError):
        Lattice(2).neighbors((1, 2, 3))
    with pytest.raises(InvalidVertexError):
        FreeGroup(2).validate((1, -1))
    with pytest.raises(InvalidVertexError):
        FreeGroup(2).validate((3,))
    with pytest.raises(InvalidVertexError):
        LatticeCrossFinite(1, path_graph(3)).validate((0, 5))


def test_orbit_declaration_checked():
    # path-3: ends are equivalent, the middle is not
    spec = LatticeCrossFinite(1, path_graph(3))
    assert spec.orbit_count == 2
    assert spec.orbit_of((0, 0)) == spec.orbit_of((4, 2)) != spec.orbit_of((0, 1))
    LatticeCrossFinite(1, path_graph(3), (0, 1, 0))
    with pytest.raises(OrbitDeclarationError):
        LatticeCrossFinite(1, path_graph(3), (0, 0, 0))
    assert LatticeCrossFinite(2, cycle_graph(5)).orbit_count == 1


def test_vectorised_matches_scalar(family):
    keys = [family.origin] + family.neighbors(family.origin)
    keys += [u for v in keys[1:] for u in family.neighbors(v)]
    coords = family.encode(keys)
    assert list(family.degrees(coords)) == [family.degree(k) for k in keys]
    assert list(family.orbits(coords)) == [family.orbit_of(k) for k in keys]
    assert family.decode(coords) == keys


@settings(max_examples=50)
@given(st.lists(st.lists(st.integers(-50, 50), min_size=3, max_size=3), min_size=1, max_size=40))
def test_pack_rows_injective(rows):
    arr = np.array(rows, dtype=np.int64)
    codes = pack_rows(arr)
    distinct_rows = {tuple(r) for r in rows}
    assert len(set(codes.tolist())) == len(distinct_rows)


def test_quotient_sizes_sum_to_ball():
    spec = Lattice(4)
    q = spec.quotient()
    sizes = ball_sizes(spec, None, 6)
    assert sizes[-1] == ball_size(spec, None, 6)
    assert q.identity is False
    assert Heisenberg().quotient().identity is True
    assert math.isclose(float(q.sizes(q.origin_state())[0]), 1.0)
