"""Cut times, cutpoints, loop-free times and intersections of finite walks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cutwalk.graphs import VertexKey
from cutwalk.walk import Trajectory, TwoSidedTrajectory, path_labels

__all__ = [
    "CutReport",
    "IntersectionRecord",
    "FamilyMismatchError",
    "horizon_cut_times",
    "cut_times_from_labels",
    "brute_force_cut_times",
    "horizon_cutpoints",
    "cut_report",
    "loop_free_times",
    "intersections",
    "pareto_maxima",
]


class FamilyMismatchError(ValueError):
    """Two trajectories from different graph families were combined."""


@dataclass
class CutReport:
    horizon: int
    cut_times: list[int]
    windowed_cut_times: list[int]
    cutpoint_vertices: set = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "cut_times": list(self.cut_times),
            "windowed_cut_times": list(self.windowed_cut_times),
            "cutpoint_vertices": [list(v) for v in sorted(self.cutpoint_vertices)],
        }


@dataclass
class IntersectionRecord:
    pairs: list[tuple[int, int]]
    R: int
    star_last: list[tuple[int, int]]

    def to_dict(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "R": self.R,
            "star_last": [list(p) for p in self.star_last],
        }


def cut_times_from_labels(labels: np.ndarray) -> np.ndarray:
    """n in [0, N-1] with max_{j<=n} last_visit(S_j) == n."""
    labels = np.asarray(labels)
    n_plus = len(labels)
    if n_plus < 2:
        return np.zeros(0, dtype=np.int64)
    last = np.full(int(labels.max()) + 1, -1, dtype=np.int64)
    np.maximum.at(last, labels, np.arange(n_plus, dtype=np.int64))
    reach = np.maximum.accumulate(last[labels])
    idx = np.arange(n_plus - 1)
    return idx[reach[:-1] == idx]


def horizon_cut_times(traj: Trajectory) -> list[int]:
    """All n in [0, N-1] with {S_0..S_n} disjoint from {S_{n+1}..S_N}."""
    (labels,) = path_labels(traj)
    return cut_times_from_labels(labels).tolist()


def brute_force_cut_times(traj: Trajectory) -> list[int]:
    """O(N^2) oracle: scan the full coincidence matrix of raw vertex keys.

    n is a cut time iff no column b > n of ``S_a == S_b`` has a hit in a row
    a <= n; with first[b] the earliest hit row of column b, that is
    min(first[n+1:]) > n.
    """
    keys = traj.keys()
    ids: dict[VertexKey, int] = {}
    code = np.array([ids.setdefault(k, len(ids)) for k in keys])
    n_plus = len(code)
    if n_plus < 2:
        return []
    eq = code[:, None] == code[None, :]
    first = eq.argmax(axis=0)
    suffix_min = np.minimum.accumulate(first[::-1])[::-1]
    n = np.arange(n_plus - 1)
    return n[suffix_min[1:] > n].tolist()


def _st_separators(labels: np.ndarray) -> set[int]:
    """Labels of vertices (other than both endpoints) on every S_0 - S_N path in PATH."""
    s, t = int(labels[0]), int(labels[-1])
    if s == t:
        return set()
    n_vert = int(labels.max()) + 1
    a, b = labels[:-1], labels[1:]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    edges = np.unique(np.stack([lo, hi], axis=1)[lo != hi], axis=0)
    adj: list[list[int]] = [[] for _ in range(n_vert)]
    for u, v in edges.tolist():
        adj[u].append(v)
        adj[v].append(u)
    disc = [-1] * n_vert
    low = [0] * n_vert
    parent = [-1] * n_vert
    disc[s] = low[s] = 0
    counter = 1
    stack = [(s, iter(adj[s]))]
    while stack:
        v, it = stack[-1]
        advanced = False
        for u in it:
            if disc[u] < 0:
                parent[u] = v
                disc[u] = low[u] = counter
                counter += 1
                stack.append((u, iter(adj[u])))
                advanced = True
                break
            if u != parent[v]:
                low[v] = min(low[v], disc[u])
        if not advanced:
            stack.pop()
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[v])
    # v separates s from t iff t sits below a child c of v with low[c] >= disc[v]
    out = set()
    c = t
    v = parent[t]
    while v != -1 and v != s:
        if low[c] >= disc[v]:
            out.add(v)
        c, v = v, parent[v]
    return out


def horizon_cutpoints(traj: Trajectory) -> set[VertexKey]:
    """Vertices other than S_0, S_N whose removal from PATH separates S_0 from S_N."""
    if len(traj) < 2:
        return set()
    (labels,) = path_labels(traj)
    seps = _st_separators(labels)
    if not seps:
        return set()
    hit = np.isin(labels, list(seps))
    _, first = np.unique(labels[hit], return_index=True)
    where = np.nonzero(hit)[0][first]
    return {traj.key(int(t)) for t in where}


def cut_report(traj: Trajectory, window: int | None = None, with_cutpoints: bool = True) -> CutReport:
    """Cut times with the stability window W (default N // 2) applied."""
    n = traj.steps
    w = n // 2 if window is None else window
    if not 0 <= w <= n:
        raise ValueError(f"window {w} outside [0, {n}]")
    cuts = horizon_cut_times(traj)
    windowed = [c for c in cuts if c <= n - w]
    cps = horizon_cutpoints(traj) if with_cutpoints else set()
    return CutReport(n, cuts, windowed, cps)


def loop_free_times(ts: TwoSidedTrajectory, horizon: int) -> list[int]:
    """j in [0, horizon) with S(-horizon, j] disjoint from S[j+1, horizon].

    The backward walk is read up to ``horizon`` steps (or its full length if
    shorter); the forward walk is truncated at ``horizon``.
    """
    fwd = ts.forward.truncate(horizon)
    bwd = ts.backward.truncate(horizon)
    lf, lb = path_labels(fwd, bwd)
    joined = np.concatenate([lb[::-1], lf[1:]])
    offset = len(lb) - 1
    cuts = cut_times_from_labels(joined)
    cuts = cuts[cuts >= offset] - offset
    return cuts[cuts < min(horizon, fwd.steps)].tolist()


def pareto_maxima(pairs) -> list[tuple[int, int]]:
    """Maximal elements under the componentwise order, sorted by i."""
    best: dict[int, int] = {}
    for i, j in pairs:
        if j > best.get(i, -1):
            best[i] = j
    out = []
    running = -1
    for i in sorted(best, reverse=True):
        if best[i] > running:
            out.append((i, best[i]))
            running = best[i]
    return sorted(out)


def intersections(t1: Trajectory, t2: Trajectory) -> IntersectionRecord:
    """All (i, j) with t1[i] == t2[j], their count R and the *-last pairs."""
    if t1.family != t2.family:
        raise FamilyMismatchError(f"{t1.family!r} vs {t2.family!r}")
    l1, l2 = path_labels(t1, t2)
    where: dict[int, list[int]] = {}
    for j, lab in enumerate(l2.tolist()):
        where.setdefault(lab, []).append(j)
    pairs = [(i, j) for i, lab in enumerate(l1.tolist()) for j in where.get(lab, ())]
    return IntersectionRecord(pairs, len(pairs), pareto_maxima(pairs))


def intersection_count(t1: Trajectory, t2: Trajectory) -> int:
    """R without materialising the pairs."""
    l1, l2 = path_labels(t1, t2)
    size = int(max(l1.max(), l2.max())) + 1
    return int(np.dot(np.bincount(l1, minlength=size), np.bincount(l2, minlength=size)))
