import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from cutwalk.graphs import FreeGroup, Lattice, LatticeCrossFinite, path_graph
from cutwalk.walk import (
    RngStream,
    WordTrie,
    path_labels,
    simulate_srw,
    simulate_two_sided,
    stream_id_for,
)


def test_steps_are_edges(family):
    traj = simulate_srw(family, None, 300, RngStream(3, 0))
    keys = traj.keys()
    assert keys[0] == family.origin
    for a, b in zip(keys, keys[1:]):
        assert b in family.neighbors(a)


def test_same_stream_same_path(family):
    a = simulate_srw(family, None, 500, RngStream(11, 4))
    b = simulate_srw(family, None, 500, RngStream(11, 4))
    c = simulate_srw(family, None, 500, RngStream(11, 5))
    assert a.same_as(b)
    assert not a.same_as(c)


def test_stream_ids_distinct():
    ids = {stream_id_for("exp", r) for r in range(1000)}
    assert len(ids) == 1000
    assert stream_id_for("a", 0) != stream_id_for("b", 0)


def test_step_distribution_uniform_lattice():
    # first steps of many independent walks are uniform over the 2d directions
    spec = Lattice(3)
    inc = spec.increments()
    first = np.array([simulate_srw(spec, None, 1, RngStream(5, r)).coords[1] for r in range(3000)])
    idx = [int(np.nonzero((inc == row).all(axis=1))[0][0]) for row in first]
    counts = np.bincount(idx, minlength=len(inc))
    assert chisquare(counts).pvalue > 1e-3


def test_step_distribution_uniform_lcf_boundary():
    # from (0, 0) on Z x path-3 the neighbours are (+-1, 0) and (0, 1)
    spec = LatticeCrossFinite(1, path_graph(3))
    traj = simulate_srw(spec, None, 20000, RngStream(9, 0))
    keys = traj.keys()
    tally = {}
    for a, b in zip(keys, keys[1:]):
        if a[1] == 0:
            d = (b[0] - a[0], b[1] - a[1])
            tally[d] = tally.get(d, 0) + 1
    assert set(tally) == {(1, 0), (-1, 0), (0, 1)}
    assert chisquare(list(tally.values())).pvalue > 1e-3


def test_two_sided_common_origin(family):
    ts = simulate_two_sided(family, None, 50, RngStream(1, 2))
    assert ts.forward.start == ts.backward.start == family.origin
    assert not ts.forward.same_as(ts.backward)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["lattice", "free"]))
def test_path_labels_match_keys(seed, kind):
    spec = Lattice(2) if kind == "lattice" else FreeGroup(2)
    ts = simulate_two_sided(spec, None, 60, RngStream(seed, 0))
    other = simulate_srw(spec, None, 60, RngStream(seed, 1))
    trajs = (ts.forward, ts.backward, other)
    labels = np.concatenate(path_labels(*trajs))
    keys = [k for t in trajs for k in t.keys()]
    for i in range(0, len(keys), 7):
        for j in range(0, len(keys), 5):
            assert (labels[i] == labels[j]) == (keys[i] == keys[j])


def test_word_trie_roundtrip():
    trie = WordTrie()
    words = [(), (1,), (1, 2), (-2, -1, -1), (1, 2, 1)]
    nodes = [trie.insert(w) for w in words]
    assert [trie.word(n) for n in nodes] == words
    assert trie.insert((1, 2)) == nodes[2]
    # stepping by the inverse of the last letter returns to the parent
    assert trie.step(nodes[2], -2) == nodes[1]


def test_truncate_and_dump():
    traj = simulate_srw(Lattice(2), None, 10, RngStream(0, 0))
    short = traj.truncate(4)
    assert short.steps == 4 and short.keys() == traj.keys()[:5]
    buf = io.StringIO()
    short.dump(buf)
    assert buf.getvalue().splitlines()[0] == "0 0"


def test_invalid_start():
    from cutwalk.graphs import InvalidVertexError

    with pytest.raises(InvalidVertexError):
        simulate_srw(Lattice(2), (0, 0, 0), 5, RngStream(0, 0))
