import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutwalk.graphs import FreeGroup, Heisenberg, Lattice, LatticeCrossFinite, path_graph
from cutwalk.orbitchain import (
    GEstimate,
    IncompleteInputError,
    OrbitChain,
    estimate_g,
    estimate_g_ladder,
    first_intersection_time,
    orbit_transition_matrix,
    orbit_visit_counts,
    select_star_orbit,
    tau_times,
)
from cutwalk.stats import mean_interval, wilson_interval
from cutwalk.walk import RngStream, simulate_srw, simulate_two_sided


@pytest.mark.parametrize("spec", [Lattice(2), Heisenberg(), FreeGroup(2)], ids=lambda s: s.label)
def test_vertex_transitive_chain(spec):
    chain = orbit_transition_matrix(spec)
    assert chain.matrix.tolist() == [[1.0]]


@pytest.mark.parametrize("d", [1, 3])
def test_lcf_path3_chain(d):
    spec = LatticeCrossFinite(d, path_graph(3))
    chain = orbit_transition_matrix(spec)
    end = spec.orbit_of((0,) * d + (0,))
    mid = 1 - end
    deg_end, deg_mid = 2 * d + 1, 2 * d + 2
    assert chain.counts[end].tolist()[end] == 2 * d and chain.counts[end][mid] == 1
    assert chain.counts[mid][mid] == 2 * d and chain.counts[mid][end] == 2
    assert np.allclose(chain.row_sums(), 1.0)
    assert chain.is_irreducible()
    # stationary mass of an orbit is proportional to (class size) x degree
    w = np.zeros(2)
    w[end], w[mid] = 2 * deg_end, deg_mid
    assert np.allclose(chain.stationary(), w / w.sum(), atol=1e-10)


def test_reducible_chain_detected():
    chain = OrbitChain(2, np.eye(2))
    assert not chain.is_irreducible()


def test_tau_times_and_counts():
    spec = LatticeCrossFinite(1, path_graph(3))
    traj = simulate_srw(spec, None, 500, RngStream(2, 0))
    orbits = [spec.orbit_of(k) for k in traj.keys()]
    assert tau_times(traj, 1).tolist() == [i for i, o in enumerate(orbits) if o == 1]
    assert orbit_visit_counts(traj).tolist() == [orbits.count(0), orbits.count(1)]
    # k = 1: tau_n = n
    t2 = simulate_srw(Lattice(3), None, 50, RngStream(2, 0))
    assert tau_times(t2, 0).tolist() == list(range(51))


def brute_first_time(fwd, bwd):
    k1, k2 = fwd.keys(), bwd.keys()
    best = math.inf
    for i, a in enumerate(k1):
        for j, b in enumerate(k2):
            if (i, j) != (0, 0) and a == b:
                best = min(best, max(i, j))
    return best


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["l1", "l3", "free", "lcf"]), st.integers(0, 2**40))
def test_first_intersection_time(kind, seed):
    spec = {"l1": Lattice(1), "l3": Lattice(3), "free": FreeGroup(2),
            "lcf": LatticeCrossFinite(1, path_graph(3))}[kind]
    ts = simulate_two_sided(spec, None, 40, RngStream(seed, 0))
    assert first_intersection_time(ts.forward, ts.backward) == brute_first_time(ts.forward, ts.backward)


def test_g_ladder_monotone_and_nested():
    spec = Lattice(3)
    ladder = estimate_g_ladder(spec, 0, [10, 20, 40, 80], 300, master_seed=5)
    ghats = [e.ghat for e in ladder]
    assert all(b <= a for a, b in zip(ghats, ghats[1:]))
    # the top rung equals a direct estimate with the same seed
    direct = estimate_g(spec, 0, 80, 300, master_seed=5)
    assert direct.ghat == ladder[-1].ghat
    assert ladder[0].ci[0] <= ladder[0].ghat <= ladder[0].ci[1]


def test_g_worker_independent():
    spec = FreeGroup(2)
    a = estimate_g(spec, 0, 50, 64, master_seed=9, workers=1)
    b = estimate_g(spec, 0, 50, 64, master_seed=9, workers=3)
    assert a == b


def test_select_star_orbit():
    spec = LatticeCrossFinite(1, path_graph(3))
    ests = [GEstimate(0, 10, 100, 0.2, 0.01, (0.1, 0.3)), GEstimate(1, 10, 100, 0.4, 0.01, (0.3, 0.5))]
    assert select_star_orbit(spec, ests) == 1
    ests[1] = GEstimate(1, 10, 100, 0.2, 0.01, (0.1, 0.3))
    assert select_star_orbit(spec, ests) == 0
    with pytest.raises(IncompleteInputError):
        select_star_orbit(spec, ests[:1])
    with pytest.raises(IncompleteInputError):
        select_star_orbit(spec, [ests[0], GEstimate(1, 20, 100, 0.2, 0.01, (0.1, 0.3))])


def test_wilson_coverage():
    rng = np.random.default_rng(1234)
    p, n = 0.3, 200
    hits = 0
    for _ in range(1000):
        k = int(rng.binomial(n, p))
        lo, hi = wilson_interval(k, n)
        hits += lo <= p <= hi
    assert hits >= 930


@given(st.integers(0, 50), st.integers(1, 50))
def test_wilson_bounds(k, extra):
    n = k + extra
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_mean_interval():
    mean, se, (lo, hi) = mean_interval([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert lo < mean < hi
