"""Simple random walk simulation with reproducible, independently seeded streams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from cutwalk.graphs import (
    Family,
    FreeGroup,
    Heisenberg,
    Lattice,
    LatticeCrossFinite,
    VertexKey,
    pack_rows,
)

__all__ = [
    "RngStream",
    "stream_id_for",
    "WordTrie",
    "Trajectory",
    "TwoSidedTrajectory",
    "simulate_srw",
    "simulate_two_sided",
    "path_labels",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A (master_seed, stream_id) pair naming one Philox stream.

    Philox is counter based, so deriving stream ``i`` costs O(1) and two
    stream ids never share a sequence.
    """

    master_seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def generator(self, *sub: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *sub))
        return np.random.Generator(np.random.Philox(seq))


def stream_id_for(experiment: str, replicate: int) -> int:
    """Stable 64-bit stream id for replicate ``replicate`` of ``experiment``."""
    digest = hashlib.blake2b(f"{experiment}\x00{replicate}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class WordTrie:
    """Prefix tree of reduced words; node 0 is the identity.

    Free-group walks move along this tree, so a node id is a canonical
    vertex label for every walk that shares the trie.
    """

    def __init__(self):
        self.parent: list[int] = [-1]
        self.letter: list[int] = [0]
        self.children: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return len(self.parent)

    def child(self, node: int, letter: int) -> int:
        nxt = self.children.get((node, letter))
        if nxt is None:
            nxt = len(self.parent)
            self.parent.append(node)
            self.letter.append(letter)
            self.children[(node, letter)] = nxt
        return nxt

    def step(self, node: int, letter: int) -> int:
        if node and self.letter[node] == -letter:
            return self.parent[node]
        return self.child(node, letter)

    def insert(self, word: VertexKey) -> int:
        node = 0
        for a in word:
            node = self.child(node, a)
        return node

    def word(self, node: int) -> VertexKey:
        out = []
        while node:
            out.append(self.letter[node])
            node = self.parent[node]
        return tuple(reversed(out))

    def words(self, nodes) -> list[VertexKey]:
        cache: dict[int, VertexKey] = {0: ()}

        def get(n):
            chain = []
            while n not in cache:
                chain.append(n)
                n = self.parent[n]
            w = cache[n]
            for c in reversed(chain):
                w = w + (self.letter[c],)
                cache[c] = w
            return w

        return [get(int(n)) for n in nodes]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Finite walk path S_0..S_N.

    For array families ``coords`` has shape (N+1, w). For free groups it holds
    node ids of ``trie``.
    """

    family: Family
    coords: np.ndarray
    trie: WordTrie | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def steps(self) -> int:
        return len(self.coords) - 1

    @property
    def start(self) -> VertexKey:
        return self.key(0)

    def key(self, t: int) -> VertexKey:
        if self.trie is not None:
            return self.trie.word(int(self.coords[t]))
        return tuple(int(c) for c in self.coords[t])

    def keys(self) -> list[VertexKey]:
        if self.trie is not None:
            return self.trie.words(self.coords)
        return [tuple(r) for r in self.coords.tolist()]

    def truncate(self, steps: int) -> "Trajectory":
        """Prefix S_0..S_steps."""
        return Trajectory(self.family, self.coords[: steps + 1], self.trie)

    def same_as(self, other: "Trajectory") -> bool:
        if self.family != other.family or len(self) != len(other):
            return False
        if self.trie is None:
            return np.array_equal(self.coords, other.coords)
        return self.keys() == other.keys()

    def dump(self, fp: TextIO) -> None:
        """Debug dump: one vertex per line, coordinates space separated."""
        for k in self.keys():
            fp.write(" ".join(str(c) for c in k) + "\n")


@dataclass(frozen=True, eq=False)
class TwoSidedTrajectory:
    """S^1 (forward) and S^2 (backward) from a common origin; S_{-j} = S^2_j."""

    forward: Trajectory
    backward: Trajectory

    @property
    def origin(self) -> VertexKey:
        return self.forward.start


def _choose(rng: np.random.Generator, deg: int, steps: int) -> np.ndarray:
    return rng.integers(0, deg, size=steps, dtype=np.int64)


def _walk_lattice(spec: Lattice, start, choices) -> np.ndarray:
    inc = spec.increments()
    coords = np.empty((len(choices) + 1, spec.d), dtype=np.int64)
    coords[0] = start
    np.cumsum(inc[choices], axis=0, out=coords[1:])
    coords[1:] += coords[0]
    return coords


def _walk_heisenberg(start, choices) -> np.ndarray:
    dx = np.array([1, -1, 0, 0], dtype=np.int64)[choices]
    dy = np.array([0, 0, 1, -1], dtype=np.int64)[choices]
    n = len(choices)
    coords = np.empty((n + 1, 3), dtype=np.int64)
    coords[0] = start
    x = start[0] + np.concatenate([[0], np.cumsum(dx)])
    coords[:, 0] = x
    coords[:, 1] = start[1] + np.concatenate([[0], np.cumsum(dy)])
    coords[:, 2] = start[2] + np.concatenate([[0], np.cumsum(x[:-1] * dy)])
    return coords


def _walk_lcf(spec: LatticeCrossFinite, start, rng: np.random.Generator, steps: int) -> np.ndarray:
    u = rng.random(steps)
    d2 = 2 * spec.d
    adj = spec.finite_adj
    fdeg = [len(r) for r in adj]
    fin = np.empty(steps + 1, dtype=np.int64)
    slots = np.empty(steps, dtype=np.int64)
    f = start[-1]
    fin[0] = f
    ul = u.tolist()
    for t in range(steps):
        c = int(ul[t] * (d2 + fdeg[f]))
        slots[t] = c
        if c >= d2:
            f = adj[f][c - d2]
        fin[t + 1] = f
    inc = np.zeros((d2 + 1, spec.d), dtype=np.int64)
    for i in range(spec.d):
        inc[2 * i, i] = 1
        inc[2 * i + 1, i] = -1
    lat = inc[np.minimum(slots, d2)]
    coords = np.empty((steps + 1, spec.d + 1), dtype=np.int64)
    coords[0, :-1] = start[:-1]
    np.cumsum(lat, axis=0, out=coords[1:, :-1])
    coords[1:, :-1] += coords[0, :-1]
    coords[:, -1] = fin
    return coords


def _walk_free(spec: FreeGroup, trie: WordTrie, start, choices) -> np.ndarray:
    letters = spec.letters()
    node = trie.insert(start)
    nodes = np.empty(len(choices) + 1, dtype=np.int64)
    nodes[0] = node
    step = trie.step
    for t, c in enumerate(choices.tolist()):
        node = step(node, letters[c])
        nodes[t + 1] = node
    return nodes


def _simulate(spec: Family, start, steps: int, rng: np.random.Generator, trie=None) -> Trajectory:
    if isinstance(spec, Lattice):
        return Trajectory(spec, _walk_lattice(spec, start, _choose(rng, spec.d_max, steps)))
    if isinstance(spec, Heisenberg):
        return Trajectory(spec, _walk_heisenberg(start, _choose(rng, 4, steps)))
    if isinstance(spec, LatticeCrossFinite):
        return Trajectory(spec, _walk_lcf(spec, start, rng, steps))
    if isinstance(spec, FreeGroup):
        trie = WordTrie() if trie is None else trie
        return Trajectory(spec, _walk_free(spec, trie, start, _choose(rng, spec.d_max, steps)), trie)
    raise TypeError(f"unsupported family {spec!r}")


def simulate_srw(spec: Family, start=None, steps: int = 0, stream: RngStream | None = None) -> Trajectory:
    """Walk ``steps`` uniform-neighbour steps from ``start``."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    start = spec.origin if start is None else spec.validate(start)
    stream = RngStream(0, 0) if stream is None else stream
    return _simulate(spec, start, steps, stream.generator())


def simulate_two_sided(spec: Family, origin=None, steps_each: int = 0, stream: RngStream | None = None) -> TwoSidedTrajectory:
    """Two independent walks from ``origin`` driven by sub-streams 0 and 1."""
    if steps_each < 0:
        raise ValueError("steps must be nonnegative")
    origin = spec.origin if origin is None else spec.validate(origin)
    stream = RngStream(0, 0) if stream is None else stream
    trie = WordTrie() if isinstance(spec, FreeGroup) else None
    fwd = _simulate(spec, origin, steps_each, stream.generator(0), trie)
    bwd = _simulate(spec, origin, steps_each, stream.generator(1), trie)
    return TwoSidedTrajectory(fwd, bwd)


def path_labels(*trajs: Trajectory) -> list[np.ndarray]:
    """Joint canonical labels: equal label iff equal vertex, across all inputs."""
    if not trajs:
        return []
    family = trajs[0].family
    if any(t.family != family for t in trajs):
        raise ValueError("trajectories come from different families")
    lengths = [len(t) for t in trajs]
    if trajs[0].trie is not None:
        nodes = _merge_tries(trajs)
    else:
        nodes = pack_rows(np.concatenate([t.coords for t in trajs]))
    _, inv = np.unique(nodes, return_inverse=True)
    inv = inv.reshape(-1)
    return np.split(inv, np.cumsum(lengths)[:-1])


def _merge_tries(trajs) -> np.ndarray:
    base = trajs[0].trie
    parts = [trajs[0].coords]
    remaps: dict[int, np.ndarray] = {id(base): None}
    merged = None
    for t in trajs[1:]:
        if id(t.trie) in remaps:
            m = remaps[id(t.trie)]
            parts.append(t.coords if m is None else m[t.coords])
            continue
        if merged is None:
            merged = WordTrie()
            merged.parent = list(base.parent)
            merged.letter = list(base.letter)
            merged.children = dict(base.children)
        src = t.trie
        m = np.empty(len(src), dtype=np.int64)
        m[0] = 0
        # parents always precede children in creation order
        for node in range(1, len(src)):
            m[node] = merged.child(int(m[src.parent[node]]), src.letter[node])
        remaps[id(src)] = m
        parts.append(m[t.coords])
    return np.concatenate(parts)
