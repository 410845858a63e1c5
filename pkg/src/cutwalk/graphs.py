"""Concrete quasi-transitive graph families with orbit labels known by construction.

Every family exposes two views of the same graph:

* a scalar view on ``VertexKey`` tuples (``neighbors``, ``degree``, ``orbit_of``),
  used by tests, oracles and anything that touches a handful of vertices;
* a vectorised view on ``(M, w)`` int64 coordinate arrays (``expand``,
  ``degrees``, ``orbits``), used by kernel propagation and BFS.

Neighbour order is fixed per family and is the order in which walk step
indices are interpreted, so replays are stable.

The ``quotient`` of a family is the lumped state space obtained from a group of
automorphisms fixing a base vertex. A walk started at that base vertex has a
law that is constant on each class, which lets the kernel and ball counts run
on a few thousand classes instead of millions of vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

VertexKey = tuple[int, ...]

__all__ = [
    "VertexKey",
    "InvalidVertexError",
    "CapacityError",
    "OrbitDeclarationError",
    "Family",
    "Lattice",
    "Heisenberg",
    "LatticeCrossFinite",
    "FreeGroup",
    "Quotient",
    "path_graph",
    "cycle_graph",
    "neighbors",
    "degree",
    "orbit_of",
    "ball_size",
    "ball_sizes",
    "pack_rows",
    "aggregate_rows",
]

# about 65 bytes per stored state; keeps a full propagation under 1 GB
DEFAULT_MAX_STATES = 10_000_000


class InvalidVertexError(ValueError):
    """Malformed or non-canonical vertex key."""


class CapacityError(RuntimeError):
    """A ball or distribution grew beyond the configured state budget."""


class OrbitDeclarationError(ValueError):
    """Declared orbit classes are inconsistent with the graph structure."""


# ---------------------------------------------------------------------------
# row packing helpers


def pack_rows(coords: np.ndarray) -> np.ndarray:
    """Injective int64 code per row, valid only within this call.

    Falls back to ranking unique rows when the mixed-radix code would overflow.
    """
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    lo = coords.min(axis=0)
    span = coords.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) < 2.0**62:
        code = np.zeros(coords.shape[0], dtype=np.int64)
        for c in range(coords.shape[1]):
            code = code * span[c] + (coords[:, c] - lo[c])
        return code
    _, inv = np.unique(coords, axis=0, return_inverse=True)
    return inv.reshape(-1).astype(np.int64)


def aggregate_rows(coords: np.ndarray, weights: np.ndarray):
    """Merge duplicate rows, summing weights. Rows come back in code order."""
    codes = pack_rows(coords)
    uniq, first, inv = np.unique(codes, return_index=True, return_inverse=True)
    summed = np.bincount(inv.reshape(-1), weights=weights, minlength=len(uniq))
    return coords[first], summed


def _check_key(v, width: int | None = None) -> VertexKey:
    if not isinstance(v, tuple) or not all(isinstance(c, (int, np.integer)) for c in v):
        raise InvalidVertexError(f"vertex key must be a tuple of ints, got {v!r}")
    if width is not None and len(v) != width:
        raise InvalidVertexError(f"expected {width} coordinates, got {v!r}")
    return tuple(int(c) for c in v)


def path_graph(m: int) -> tuple[tuple[int, ...], ...]:
    """Adjacency lists of the path 0 - 1 - ... - (m-1)."""
    return tuple(tuple(u for u in (i - 1, i + 1) if 0 <= u < m) for i in range(m))


def cycle_graph(m: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(sorted({(i - 1) % m, (i + 1) % m})) for i in range(m))


# ---------------------------------------------------------------------------
# quotient state spaces


@dataclass(frozen=True)
class Quotient:
    """Lumped state space for walks started at ``base``.

    ``state_of`` maps a vertex to its class representative; ``sizes`` gives
    vertices per class as float64 and ``exact_sizes`` as Python ints, since
    free-group spheres overflow int64.
    """

    family: "Family"
    base: VertexKey
    kind: str = "identity"

    @property
    def identity(self) -> bool:
        return self.kind == "identity"

    def origin_state(self) -> np.ndarray:
        return self.family._quot_encode(self.kind, self.base)

    def expand(self, states: np.ndarray):
        return self.family._quot_expand(self.kind, states)

    def degrees(self, states: np.ndarray) -> np.ndarray:
        return self.family._quot_degrees(self.kind, states)

    def sizes(self, states: np.ndarray) -> np.ndarray:
        return self.family._quot_sizes(self.kind, states)

    def exact_sizes(self, states: np.ndarray) -> list[int]:
        return self.family._quot_exact_sizes(self.kind, states)

    def state_of(self, v: VertexKey) -> np.ndarray:
        """Class representative row of a concrete vertex."""
        return self.family._quot_encode(self.kind, v)


def _sorted_abs(block: np.ndarray) -> np.ndarray:
    return -np.sort(-np.abs(block), axis=1)


def _hyperoctahedral_sizes(block: np.ndarray) -> np.ndarray:
    """Orbit sizes of sorted |x| rows under signed coordinate permutations."""
    m, d = block.shape
    out = np.full(m, float(math.factorial(d)))
    nz = (block != 0).sum(axis=1)
    out *= 2.0**nz
    # divide by multiplicity factorials of equal values
    if d > 1:
        run = np.ones(m)
        for c in range(1, d):
            same = block[:, c] == block[:, c - 1]
            run = np.where(same, run + 1, 1.0)
            out = out / np.where(same, run, 1.0)
    return out


# ---------------------------------------------------------------------------
# families


class Family:
    """Shared behaviour; concrete families override the hooks."""

    width: int
    orbit_count: int = 1
    # polynomial growth degree by construction; None means super-polynomial
    growth_degree: int | None

    # scalar interface -----------------------------------------------------
    def validate(self, v) -> VertexKey:
        return _check_key(v, self.width)

    def neighbors(self, v) -> list[VertexKey]:
        v = self.validate(v)
        arr = np.asarray([v], dtype=np.int64)
        _, nb = self.expand(arr)
        return [tuple(int(c) for c in row) for row in nb]

    def degree(self, v) -> int:
        v = self.validate(v)
        return int(self.degrees(np.asarray([v], dtype=np.int64))[0])

    def orbit_of(self, v) -> int:
        v = self.validate(v)
        return int(self.orbits(np.asarray([v], dtype=np.int64))[0])

    # vectorised interface -------------------------------------------------
    def expand(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All (source index, neighbour) pairs, grouped by neighbour slot."""
        raise NotImplementedError

    def degrees(self, coords: np.ndarray) -> np.ndarray:
        return np.full(len(coords), self.d_max, dtype=np.int64)

    def orbits(self, coords: np.ndarray) -> np.ndarray:
        return np.zeros(len(coords), dtype=np.int64)

    @property
    def d_max(self) -> int:
        raise NotImplementedError

    def encode(self, keys) -> np.ndarray:
        return np.asarray([self.validate(k) for k in keys], dtype=np.int64).reshape(-1, self.width)

    def decode(self, coords: np.ndarray) -> list[VertexKey]:
        return [tuple(int(c) for c in row) for row in np.asarray(coords)]

    # quotient hooks ---------------------------------------------------------
    def quotient(self, base=None, reduced: bool = True) -> Quotient:
        base = self.origin if base is None else self.validate(base)
        kind = self._quotient_kind(base) if reduced else "identity"
        return Quotient(self, base, kind)

    def _quotient_kind(self, base: VertexKey) -> str:
        return "identity"

    def _quot_encode(self, kind, v) -> np.ndarray:
        return self.encode([v])

    def _quot_expand(self, kind, states):
        return self.expand(states)

    def _quot_degrees(self, kind, states):
        return self.degrees(states)

    def _quot_sizes(self, kind, states):
        return np.ones(len(states))

    def _quot_exact_sizes(self, kind, states) -> list[int]:
        return [int(round(x)) for x in self._quot_sizes(kind, states)]

    # misc -----------------------------------------------------------------
    def orbit_representative(self, orbit: int) -> VertexKey:
        if orbit != 0:
            raise ValueError(f"{self.label} has a single orbit, got {orbit}")
        return self.origin

    @property
    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Lattice(Family):
    """Z^d with the standard generators; step slot 2i is +e_i, 2i+1 is -e_i."""

    d: int
    origin: VertexKey = field(default=None)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("lattice dimension must be positive")
        if self.origin is None:
            object.__setattr__(self, "origin", (0,) * self.d)

    @property
    def width(self) -> int:
        return self.d

    @property
    def growth_degree(self) -> int:
        return self.d

    @property
    def d_max(self) -> int:
        return 2 * self.d

    @property
    def label(self) -> str:
        return f"Lattice({self.d})"

    def increments(self) -> np.ndarray:
        inc = np.zeros((2 * self.d, self.d), dtype=np.int64)
        for i in range(self.d):
            inc[2 * i, i] = 1
            inc[2 * i + 1, i] = -1
        return inc

    def expand(self, coords):
        coords = np.asarray(coords, dtype=np.int64)
        m = len(coords)
        inc = self.increments()
        nb = (coords[None, :, :] + inc[:, None, :]).reshape(-1, self.d)
        src = np.tile(np.arange(m), 2 * self.d)
        return src, nb

    def _quotient_kind(self, base):
        return "octahedral" if not any(base) else "identity"

    def _quot_encode(self, kind, v):
        arr = self.encode([v])
        return _sorted_abs(arr) if kind == "octahedral" else arr

    def _quot_expand(self, kind, states):
        src, nb = self.expand(states)
        return (src, _sorted_abs(nb)) if kind == "octahedral" else (src, nb)

    def _quot_sizes(self, kind, states):
        if kind == "octahedral":
            return _hyperoctahedral_sizes(np.asarray(states))
        return np.ones(len(states))


@dataclass(frozen=True)
class Heisenberg(Family):
    """Discrete Heisenberg group, (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x*y').

    Right multiplication by a, a^-1, b, b^-1 gives the neighbour slots 0..3.
    """

    origin: VertexKey = (0, 0, 0)
    width = 3
    growth_degree = 4

    @property
    def d_max(self) -> int:
        return 4

    @property
    def label(self) -> str:
        return "Heisenberg"

    def expand(self, coords):
        coords = np.asarray(coords, dtype=np.int64)
        m = len(coords)
        x = coords[:, 0]
        blocks = []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = coords.copy()
            nb[:, 0] += dx
            nb[:, 1] += dy
            nb[:, 2] += x * dy
            blocks.append(nb)
        return np.tile(np.arange(m), 4), np.concatenate(blocks)


def _equitable_partition(adj: tuple[tuple[int, ...], ...]) -> tuple[int, ...]:
    """Coarsest equitable partition by colour refinement, labelled by first vertex."""
    m = len(adj)
    colour = [0] * m
    while True:
        sig = [(colour[v], tuple(sorted(colour[u] for u in adj[v]))) for v in range(m)]
        relabel: dict = {}
        new = [relabel.setdefault(s, len(relabel)) for s in sig]
        if len(relabel) == len(set(colour)):
            break
        colour = new
    relabel = {}
    return tuple(relabel.setdefault(c, len(relabel)) for c in colour)


@dataclass(frozen=True)
class LatticeCrossFinite(Family):
    """Cartesian product Z^d x F for a connected finite graph F.

    Keys are ``(x_1, ..., x_d, f)``. Slots 0..2d-1 are lattice moves, then the
    finite neighbours of ``f`` in ascending order. ``classes`` assigns each
    finite vertex an orbit label; when omitted the coarsest equitable
    partition of F is used. Declared classes are only checked for the
    necessary conditions (constant degree and neighbour-class counts).
    """

    d: int
    finite_adj: tuple[tuple[int, ...], ...]
    classes: tuple[int, ...] | None = None
    origin: VertexKey = field(default=None)

    def __post_init__(self):
        adj = tuple(tuple(sorted(set(int(u) for u in row))) for row in self.finite_adj)
        object.__setattr__(self, "finite_adj", adj)
        m = len(adj)
        if m == 0:
            raise ValueError("finite factor must be nonempty")
        for v, row in enumerate(adj):
            for u in row:
                if not 0 <= u < m or u == v or v not in adj[u]:
                    raise ValueError(f"finite adjacency is not a simple symmetric graph at {v}-{u}")
        seen, stack = {0}, [0]
        while stack:
            for u in adj[stack.pop()]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != m:
            raise ValueError("finite factor must be connected")
        if self.classes is None:
            object.__setattr__(self, "classes", _equitable_partition(adj))
        else:
            cls = tuple(int(c) for c in self.classes)
            if len(cls) != m or sorted(set(cls)) != list(range(len(set(cls)))):
                raise OrbitDeclarationError("classes must label every finite vertex with 0..k-1")
            object.__setattr__(self, "classes", cls)
        self._check_classes()
        if self.origin is None:
            object.__setattr__(self, "origin", (0,) * self.d + (0,))

    def _check_classes(self):
        k = max(self.classes) + 1
        rows: dict[int, tuple] = {}
        for f, row in enumerate(self.finite_adj):
            counts = [0] * k
            for u in row:
                counts[self.classes[u]] += 1
            sig = tuple(counts)
            c = self.classes[f]
            if rows.setdefault(c, sig) != sig:
                raise OrbitDeclarationError(
                    f"finite vertices in class {c} differ in neighbour-class counts: "
                    f"{rows[c]} vs {sig}"
                )

    @property
    def width(self) -> int:
        return self.d + 1

    @property
    def growth_degree(self) -> int:
        return self.d

    @property
    def orbit_count(self) -> int:
        return max(self.classes) + 1

    @property
    def finite_degrees(self) -> np.ndarray:
        return np.asarray([len(r) for r in self.finite_adj], dtype=np.int64)

    @property
    def d_max(self) -> int:
        return 2 * self.d + int(self.finite_degrees.max())

    @property
    def label(self) -> str:
        return f"LatticeCrossFinite({self.d}, m={len(self.finite_adj)})"

    def validate(self, v):
        v = _check_key(v, self.width)
        if not 0 <= v[-1] < len(self.finite_adj):
            raise InvalidVertexError(f"finite coordinate out of range in {v!r}")
        return v

    def degrees(self, coords):
        return 2 * self.d + self.finite_degrees[np.asarray(coords)[:, -1]]

    def orbits(self, coords):
        return np.asarray(self.classes, dtype=np.int64)[np.asarray(coords)[:, -1]]

    def expand(self, coords):
        coords = np.asarray(coords, dtype=np.int64)
        m = len(coords)
        srcs, blocks = [], []
        for i in range(self.d):
            for s in (1, -1):
                nb = coords.copy()
                nb[:, i] += s
                blocks.append(nb)
                srcs.append(np.arange(m))
        fin = coords[:, -1]
        maxdeg = int(self.finite_degrees.max())
        table = np.full((len(self.finite_adj), maxdeg), -1, dtype=np.int64)
        for f, row in enumerate(self.finite_adj):
            table[f, : len(row)] = row
        for slot in range(maxdeg):
            tgt = table[fin, slot]
            ok = tgt >= 0
            nb = coords[ok].copy()
            nb[:, -1] = tgt[ok]
            blocks.append(nb)
            srcs.append(np.nonzero(ok)[0])
        return np.concatenate(srcs), np.concatenate(blocks)

    def neighbors(self, v):
        v = self.validate(v)
        out = []
        for i in range(self.d):
            for s in (1, -1):
                w = list(v)
                w[i] += s
                out.append(tuple(w))
        out.extend(v[:-1] + (u,) for u in self.finite_adj[v[-1]])
        return out

    def orbit_representative(self, orbit: int) -> VertexKey:
        for f, c in enumerate(self.classes):
            if c == orbit:
                return (0,) * self.d + (f,)
        raise ValueError(f"no orbit {orbit} in {self.label}")

    def _quotient_kind(self, base):
        return "octahedral" if not any(base[:-1]) else "identity"

    def _quot_encode(self, kind, v):
        arr = self.encode([v])
        if kind == "octahedral":
            arr[:, :-1] = _sorted_abs(arr[:, :-1])
        return arr

    def _quot_expand(self, kind, states):
        src, nb = self.expand(states)
        if kind == "octahedral":
            nb[:, :-1] = _sorted_abs(nb[:, :-1])
        return src, nb

    def _quot_sizes(self, kind, states):
        if kind == "octahedral":
            return _hyperoctahedral_sizes(np.asarray(states)[:, :-1])
        return np.ones(len(states))


@dataclass(frozen=True)
class FreeGroup(Family):
    """Cayley graph of the free group F_r (the 2r-regular tree).

    Keys are fully reduced words; letter ``+i`` is generator i (1-based) and
    ``-i`` its inverse. Neighbour slot order is +1, -1, +2, -2, ...
    Array form pads words on the right with zeros.
    """

    rank: int
    origin: VertexKey = ()
    growth_degree = None

    def __post_init__(self):
        if self.rank < 2:
            raise ValueError("free group rank must be at least 2")

    @property
    def width(self) -> int:  # variable; arrays are padded
        return 0

    @property
    def d_max(self) -> int:
        return 2 * self.rank

    @property
    def label(self) -> str:
        return f"FreeGroup({self.rank})"

    def letters(self) -> list[int]:
        return [s for i in range(1, self.rank + 1) for s in (i, -i)]

    def validate(self, v):
        v = _check_key(v)
        for i, a in enumerate(v):
            if a == 0 or abs(a) > self.rank:
                raise InvalidVertexError(f"bad letter {a} in {v!r}")
            if i and v[i - 1] == -a:
                raise InvalidVertexError(f"word {v!r} is not reduced")
        return v

    @staticmethod
    def multiply(word: VertexKey, letter: int) -> VertexKey:
        if word and word[-1] == -letter:
            return word[:-1]
        return word + (letter,)

    def neighbors(self, v):
        v = self.validate(v)
        return [self.multiply(v, s) for s in self.letters()]

    def degree(self, v):
        self.validate(v)
        return 2 * self.rank

    def orbit_of(self, v):
        self.validate(v)
        return 0

    def encode(self, keys, width: int | None = None) -> np.ndarray:
        keys = [self.validate(k) for k in keys]
        w = max([len(k) for k in keys] + [width or 0, 1])
        arr = np.zeros((len(keys), w), dtype=np.int64)
        for r, k in enumerate(keys):
            arr[r, : len(k)] = k
        return arr

    def decode(self, coords):
        return [tuple(int(c) for c in row if c != 0) for row in np.asarray(coords)]

    def expand(self, coords):
        coords = np.asarray(coords, dtype=np.int64)
        m, w = coords.shape
        length = (coords != 0).sum(axis=1)
        if m and length.max() >= w:
            coords = np.concatenate([coords, np.zeros((m, 1), dtype=np.int64)], axis=1)
            w += 1
        rows = np.arange(m)
        last = np.where(length > 0, coords[rows, np.maximum(length - 1, 0)], 0)
        blocks = []
        for s in self.letters():
            nb = coords.copy()
            back = last == -s
            nb[rows[back], length[back] - 1] = 0
            fwd = ~back
            nb[rows[fwd], length[fwd]] = s
            blocks.append(nb)
        return np.tile(rows, 2 * self.rank), np.concatenate(blocks)

    # radial quotient: state = word length
    def _quotient_kind(self, base):
        return "radial" if base == () else "identity"

    def _quot_encode(self, kind, v):
        if kind == "radial":
            return np.asarray([[len(v)]], dtype=np.int64)
        return self.encode([v])

    def _quot_expand(self, kind, states):
        if kind != "radial":
            return self.expand(states)
        length = np.asarray(states, dtype=np.int64)[:, 0]
        m = len(length)
        two_r = 2 * self.rank
        # slot 0 points back toward the root (or out, at the root); the rest go out
        src = np.tile(np.arange(m), two_r)
        nb = np.empty(two_r * m, dtype=np.int64)
        nb[:m] = np.where(length > 0, length - 1, 1)
        nb[m:] = np.tile(length + 1, two_r - 1)
        return src, nb[:, None]

    def _quot_degrees(self, kind, states):
        return np.full(len(states), 2 * self.rank, dtype=np.int64)

    def _quot_sizes(self, kind, states):
        if kind != "radial":
            return np.ones(len(states))
        length = np.asarray(states)[:, 0].astype(float)
        two_r = 2.0 * self.rank
        return np.where(length == 0, 1.0, two_r * (two_r - 1.0) ** (length - 1.0))

    def _quot_exact_sizes(self, kind, states):
        if kind != "radial":
            return [1] * len(states)
        two_r = 2 * self.rank
        return [1 if L == 0 else two_r * (two_r - 1) ** (int(L) - 1) for L in np.asarray(states)[:, 0]]


# ---------------------------------------------------------------------------
# module-level operations


def neighbors(spec: Family, v) -> list[VertexKey]:
    return spec.neighbors(v)


def degree(spec: Family, v) -> int:
    return spec.degree(v)


def orbit_of(spec: Family, v) -> int:
    return spec.orbit_of(v)


def _translate_to_base(spec: Family, center: VertexKey) -> VertexKey:
    # balls are automorphism invariant; move the centre to its orbit's base point
    if isinstance(spec, (Lattice, Heisenberg, FreeGroup)):
        return spec.origin
    if isinstance(spec, LatticeCrossFinite):
        return (0,) * spec.d + (center[-1],)
    return center


def ball_sizes(spec: Family, center=None, n_max: int = 0, *, max_states: int = DEFAULT_MAX_STATES) -> list[int]:
    """|B(center, n)| for n = 0..n_max by layered BFS on the lumped state space."""
    if n_max < 0:
        raise ValueError("radius must be nonnegative")
    center = spec.origin if center is None else spec.validate(center)
    q = spec.quotient(_translate_to_base(spec, center))
    prev = np.zeros((0, q.origin_state().shape[1]), dtype=np.int64)
    cur = q.origin_state()
    total = 1
    out = [1]
    n_states = 1
    for _ in range(n_max):
        _, nb = q.expand(cur)
        width = max(nb.shape[1], cur.shape[1], prev.shape[1])
        nb, cur_w, prev_w = (_pad(a, width) for a in (nb, cur, prev))
        joint = np.concatenate([prev_w, cur_w, nb])
        codes = pack_rows(joint)
        old = codes[: len(prev_w) + len(cur_w)]
        new_codes, first = np.unique(codes[len(old):], return_index=True)
        keep = ~np.isin(new_codes, old)
        nxt = nb[first[keep]]
        n_states += len(nxt)
        if n_states > max_states:
            raise CapacityError(f"BFS exceeded {max_states} states")
        total += sum(q.exact_sizes(nxt))
        out.append(total)
        prev, cur = cur_w, nxt
    return out


def _pad(a: np.ndarray, width: int) -> np.ndarray:
    if a.shape[1] == width:
        return a
    return np.concatenate([a, np.zeros((a.shape[0], width - a.shape[1]), dtype=np.int64)], axis=1)


def ball_size(spec: Family, center=None, n: int = 0, *, max_states: int = DEFAULT_MAX_STATES) -> int:
    return ball_sizes(spec, center, n, max_states=max_states)[-1]
