"""Orbit-level machinery: the induced chain on orbits, stopping times into an
orbit, and Monte Carlo estimates of the two-walk non-intersection probability.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from cutwalk.graphs import Family, OrbitDeclarationError
from cutwalk.stats import wilson_interval
from cutwalk.walk import RngStream, Trajectory, path_labels, simulate_two_sided, stream_id_for

__all__ = [
    "OrbitChain",
    "GEstimate",
    "IncompleteInputError",
    "orbit_transition_matrix",
    "tau_times",
    "orbit_visit_counts",
    "first_intersection_time",
    "estimate_g",
    "estimate_g_ladder",
    "select_star_orbit",
    "star_orbit_stability",
]


class IncompleteInputError(ValueError):
    """An orbit is missing from a set of per-orbit estimates."""


@dataclass
class OrbitChain:
    k: int
    matrix: np.ndarray
    # neighbour counts per orbit (rows) for the representative, exact integers
    counts: np.ndarray = field(repr=False, default=None)

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def is_irreducible(self) -> bool:
        support = self.matrix > 0
        for i in range(self.k):
            seen = {i}
            stack = [i]
            while stack:
                a = stack.pop()
                for b in np.nonzero(support[a])[0].tolist():
                    if b not in seen:
                        seen.add(b)
                        stack.append(b)
            if len(seen) != self.k:
                return False
        return True

    def stationary(self, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
        """Stationary vector by power iteration on the lazy chain (P + I) / 2."""
        lazy = 0.5 * (self.matrix + np.eye(self.k))
        pi = np.full(self.k, 1.0 / self.k)
        for _ in range(max_iter):
            nxt = pi @ lazy
            if np.abs(nxt - pi).max() < tol:
                return nxt / nxt.sum()
            pi = nxt
        raise RuntimeError("power iteration did not converge")

    def to_dict(self) -> dict:
        return {"k": self.k, "matrix": self.matrix.tolist()}


def _representatives(spec: Family, orbit: int, count: int) -> list:
    base = spec.orbit_representative(orbit)
    reps = [base]
    # translate along the orbit by walking neighbours that stay in it
    frontier = [base]
    seen = {base}
    while len(reps) < count and frontier:
        nxt = []
        for v in frontier:
            for u in spec.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
                    if spec.orbit_of(u) == orbit and len(reps) < count:
                        reps.append(u)
        frontier = nxt
    return reps


def orbit_transition_matrix(spec: Family, n_reps: int = 5) -> OrbitChain:
    """p_ij = #(neighbours of x in orbit j) / deg(x) for x in orbit i.

    Checked on ``n_reps`` representatives per orbit; any disagreement in the
    integer neighbour counts raises ``OrbitDeclarationError``.
    """
    k = spec.orbit_count
    counts = np.zeros((k, k), dtype=np.int64)
    degs = np.zeros(k, dtype=np.int64)
    for i in range(k):
        seen_row = None
        for x in _representatives(spec, i, n_reps):
            row = np.zeros(k, dtype=np.int64)
            for u in spec.neighbors(x):
                row[spec.orbit_of(u)] += 1
            if seen_row is None:
                seen_row = row
            elif not np.array_equal(row, seen_row):
                raise OrbitDeclarationError(f"orbit {i}: representatives disagree, {seen_row} vs {row} at {x}")
        counts[i] = seen_row
        degs[i] = seen_row.sum()
    return OrbitChain(k, counts / degs[:, None], counts)


def tau_times(traj: Trajectory, target: int) -> np.ndarray:
    """All r <= N with S_r in orbit ``target``, increasing."""
    return np.nonzero(_orbit_path(traj) == target)[0]


def orbit_visit_counts(traj: Trajectory) -> np.ndarray:
    return np.bincount(_orbit_path(traj), minlength=traj.family.orbit_count)


def _orbit_path(traj: Trajectory) -> np.ndarray:
    if traj.trie is not None:
        return np.zeros(len(traj), dtype=np.int64)
    return traj.family.orbits(traj.coords)


@dataclass
class GEstimate:
    """Horizon-T upper-bound estimate of the non-intersection probability g."""

    orbit: int
    horizon: int
    replicates: int
    ghat: float
    standard_error: float
    ci: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "orbit": self.orbit,
            "horizon": self.horizon,
            "replicates": self.replicates,
            "ghat": self.ghat,
            "standard_error": self.standard_error,
            "ci_low": self.ci[0],
            "ci_high": self.ci[1],
            "kind": "finite-horizon upper-bound estimate",
        }


def first_intersection_time(fwd: Trajectory, bwd: Trajectory) -> float:
    """min over (i,j) != (0,0) with S1_i == S2_j of max(i, j); inf if none."""
    lf, lb = path_labels(fwd, bwd)
    size = int(max(lf.max(), lb.max())) + 1
    big = np.iinfo(np.int64).max
    first_f = np.full(size, big)
    first_b = np.full(size, big)
    for first, lab in ((first_f, lf), (first_b, lb)):
        uniq, idx = np.unique(lab, return_index=True)
        first[uniq] = idx
    o = lf[0]
    first_f[o] = big
    first_b[o] = big
    best = np.maximum(first_f, first_b).min()
    # pairs through the origin: (i, 0) with i >= 1 or (0, j) with j >= 1
    ret_f = np.nonzero(lf[1:] == o)[0]
    ret_b = np.nonzero(lb[1:] == o)[0]
    if len(ret_f):
        best = min(best, ret_f[0] + 1)
    if len(ret_b):
        best = min(best, ret_b[0] + 1)
    return math.inf if best == big else float(best)


def _g_replicate(args) -> float:
    spec, rep, horizon, master_seed, tag, r = args
    ts = simulate_two_sided(spec, rep, horizon, RngStream(master_seed, stream_id_for(tag, r)))
    return first_intersection_time(ts.forward, ts.backward)


def _first_times(spec, orbit, horizon, replicates, master_seed, workers) -> np.ndarray:
    rep = spec.orbit_representative(orbit)
    tag = f"g/{spec.label}/{orbit}"
    jobs = [(spec, rep, horizon, master_seed, tag, r) for r in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return np.asarray(list(pool.map(_g_replicate, jobs, chunksize=max(1, replicates // (4 * workers)))))
    return np.asarray([_g_replicate(j) for j in jobs])


def _estimate(orbit, horizon, replicates, times) -> GEstimate:
    escapes = int((times > horizon).sum())
    lo, hi = wilson_interval(escapes, replicates)
    return GEstimate(orbit, horizon, replicates, escapes / replicates, (hi - lo) / 2.0, (lo, hi))


def estimate_g(spec: Family, orbit: int, horizon: int, replicates: int, master_seed: int = 0,
               workers: int = 1) -> GEstimate:
    """Fraction of walk pairs from the orbit representative with no
    coincidence (i, j) != (0, 0) inside [0, T]^2."""
    times = _first_times(spec, orbit, horizon, replicates, master_seed, workers)
    return _estimate(orbit, horizon, replicates, times)


def estimate_g_ladder(spec: Family, orbit: int, horizons: list[int], replicates: int,
                      master_seed: int = 0, workers: int = 1) -> list[GEstimate]:
    """Nested replay: one set of walks at max(horizons), read off at each T."""
    times = _first_times(spec, orbit, max(horizons), replicates, master_seed, workers)
    return [_estimate(orbit, T, replicates, times) for T in horizons]


def select_star_orbit(spec: Family, estimates: list[GEstimate]) -> int:
    """Orbit with the largest ghat; ties go to the lowest index."""
    by_orbit = {e.orbit: e for e in estimates}
    missing = set(range(spec.orbit_count)) - set(by_orbit)
    if missing:
        raise IncompleteInputError(f"no estimate for orbits {sorted(missing)}")
    if len({(e.horizon, e.replicates) for e in estimates}) > 1:
        raise IncompleteInputError("estimates must share horizon and replicate count")
    best = max(range(spec.orbit_count), key=lambda i: (by_orbit[i].ghat, -i))
    return best


def star_orbit_stability(spec: Family, horizon: int, replicates: int, seeds: list[int],
                         workers: int = 1) -> tuple[int, bool, list[int]]:
    """Select the star orbit under each seed set; ``stable`` is False when the
    picks disagree, and the first pick is then only nominal."""
    picks = []
    for s in seeds:
        ests = [estimate_g(spec, i, horizon, replicates, s, workers) for i in range(spec.orbit_count)]
        picks.append(select_star_orbit(spec, ests))
    return picks[0], len(set(picks)) == 1, picks
