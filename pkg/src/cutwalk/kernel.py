"""Exact heat-kernel propagation and the quantities built from it.

Distributions are stored on a quotient state space (see ``graphs.Quotient``):
each state carries the total mass of its class, and the per-vertex
probability is ``mass / size``. With the identity quotient this is ordinary
sparse propagation over vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from cutwalk.cuts import intersection_count
from cutwalk.graphs import (
    DEFAULT_MAX_STATES,
    CapacityError,
    Family,
    Quotient,
    VertexKey,
    aggregate_rows,
    ball_sizes,
    pack_rows,
)
from cutwalk.walk import RngStream, simulate_two_sided, stream_id_for

__all__ = [
    "SparseDist",
    "KernelAudit",
    "GrowthFit",
    "TailUnavailable",
    "point_mass",
    "step_dist",
    "propagate",
    "pn_sequence",
    "reversibility_check",
    "heat_kernel_curve",
    "heat_kernel_audit",
    "green_sum",
    "expected_intersections",
    "kernel_audit",
    "c_lower_bound",
    "volume_growth_degree",
    "monte_carlo_R",
    "least_squares_slope",
]


class TailUnavailable(ValueError):
    """E(R) tail bound needs a growth degree of at least 5."""


def _pad(a: np.ndarray, width: int) -> np.ndarray:
    if a.shape[1] >= width:
        return a
    return np.concatenate([a, np.zeros((a.shape[0], width - a.shape[1]), dtype=np.int64)], axis=1)


@dataclass(frozen=True, eq=False)
class SparseDist:
    """mu_n = p^(n)(base, .) on ``quotient``; ``mass[i]`` is the mass of class ``states[i]``."""

    quotient: Quotient
    states: np.ndarray
    mass: np.ndarray
    time: int

    @property
    def family(self) -> Family:
        return self.quotient.family

    def total_mass(self) -> float:
        return math.fsum(self.mass.tolist())

    def vertex_probs(self) -> np.ndarray:
        """Per-vertex probability inside each class."""
        return self.mass / self.quotient.sizes(self.states)

    def prob(self, v) -> float:
        """p^(n)(base, v)."""
        row = self.quotient.state_of(self.family.validate(v))
        width = max(row.shape[1], self.states.shape[1])
        states = _pad(self.states, width)
        row = _pad(row, width)
        hit = np.nonzero((states == row).all(axis=1))[0]
        if len(hit) == 0:
            return 0.0
        return float(self.vertex_probs()[hit[0]])

    @property
    def entries(self) -> dict[VertexKey, float]:
        """Vertex -> mass map. Only available on the identity quotient."""
        if not self.quotient.identity:
            raise ValueError("entries of a lumped distribution are classes, not vertices")
        keys = self.family.decode(self.states)
        return dict(zip(keys, self.mass.tolist()))


def point_mass(spec: Family, v=None, reduced: bool = True) -> SparseDist:
    q = spec.quotient(v, reduced=reduced)
    return SparseDist(q, q.origin_state(), np.ones(1), 0)


def step_dist(spec: Family, dist: SparseDist, max_states: int = DEFAULT_MAX_STATES) -> SparseDist:
    """mu_{n+1}(y) = sum_{x ~ y} mu_n(x) / deg(x), lumped when the quotient is."""
    q = dist.quotient
    if q.family != spec:
        raise ValueError("distribution belongs to a different family")
    src, nb = q.expand(dist.states)
    if len(nb) > max_states:
        raise CapacityError(f"propagation needs {len(nb)} states, budget {max_states}")
    w = (dist.mass / q.degrees(dist.states))[src]
    states, mass = aggregate_rows(nb, w)
    return SparseDist(q, states, mass, dist.time + 1)


def propagate(spec: Family, o=None, n_max: int = 0, reduced: bool = True,
              max_states: int = DEFAULT_MAX_STATES) -> list[SparseDist]:
    """[mu_0, ..., mu_{n_max}] from ``o``; ``max_states`` also caps the total kept."""
    dists = [point_mass(spec, o, reduced)]
    held = 1
    for _ in range(n_max):
        dists.append(step_dist(spec, dists[-1], max_states))
        held += len(dists[-1].mass)
        if held > max_states:
            raise CapacityError(f"{held} states held after {dists[-1].time} steps, budget {max_states}")
    return dists


def pn_sequence(spec: Family, o=None, n_max: int = 0, reduced: bool = True) -> list[float]:
    """p^(n)(o, o) for n = 0..n_max."""
    o = spec.origin if o is None else spec.validate(o)
    return [d.prob(o) for d in propagate(spec, o, n_max, reduced)]


def reversibility_check(spec: Family, x=None, n_max: int = 10, sample_size: int = 5, seed: int = 0) -> float:
    """max |deg(x) p^(n)(x,y) - deg(y) p^(n)(y,x)| over sampled y and n <= n_max."""
    x = spec.origin if x is None else spec.validate(x)
    from_x = propagate(spec, x, n_max, reduced=False)
    rng = np.random.default_rng(seed)
    pool = []
    for d in from_x[max(0, n_max - 1):]:
        keys = list(d.entries)
        picks = rng.choice(len(keys), size=min(sample_size, len(keys)), replace=False)
        pool.extend(keys[i] for i in sorted(picks))
    deg_x = spec.degree(x)
    worst = 0.0
    for y in dict.fromkeys(pool):
        from_y = propagate(spec, y, n_max, reduced=False)
        deg_y = spec.degree(y)
        for n in range(n_max + 1):
            worst = max(worst, abs(deg_x * from_x[n].prob(y) - deg_y * from_y[n].prob(x)))
    return worst


def _sup_ratio(dist: SparseDist) -> float:
    """max_y p^(n)(base, y) / deg(y)."""
    q = dist.quotient
    return float(np.max(dist.vertex_probs() / q.degrees(dist.states)))


def heat_kernel_curve(spec: Family, D: float, n_max: int, o=None) -> np.ndarray:
    """r(n) = n^{D/2} max_y p^(n)(o, y) / deg(y) for n = 0..n_max (r(0) = 0)."""
    out = np.zeros(n_max + 1)
    d = point_mass(spec, o)
    # streamed: only the current step is held
    for n in range(1, n_max + 1):
        d = step_dist(spec, d)
        out[n] = n ** (D / 2) * _sup_ratio(d)
    return out


def least_squares_slope(x, y) -> float:
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)[0])


@dataclass
class KernelAudit:
    family: str
    D: float
    n_range: tuple[int, int]
    sup_ratio: float
    r_curve: list[float] = field(default_factory=list)
    slope: float = float("nan")
    green_partial: list[float] = field(default_factory=list)
    er_truncated: float | None = None
    er_tail_bound: float | None = None
    c_hat: float | None = None
    certified: bool = False

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "D": self.D,
            "n_range": list(self.n_range),
            "sup_ratio": self.sup_ratio,
            "r_curve": list(self.r_curve),
            "slope": self.slope,
            "green_partial": list(self.green_partial),
            "er_truncated": self.er_truncated,
            "er_tail_bound": self.er_tail_bound,
            "c_hat": self.c_hat,
            "certified": self.certified,
            "note": "tail bound extrapolates the measured kernel constant; c_hat is empirical-conservative",
        }


def heat_kernel_audit(spec: Family, D: float, n_range: tuple[int, int]) -> KernelAudit:
    """Sup-ratio part of the audit, over one base vertex per orbit.

    ``r_curve`` is the pointwise max over orbit representatives of r(n) for
    n in ``n_range``; ``slope`` is its least-squares slope.
    """
    lo, hi = n_range
    curve = np.zeros(hi + 1)
    for orbit in range(spec.orbit_count):
        curve = np.maximum(curve, heat_kernel_curve(spec, D, hi, spec.orbit_representative(orbit)))
    ns = np.arange(lo, hi + 1)
    seg = curve[lo: hi + 1]
    slope = least_squares_slope(ns, seg) if len(ns) > 1 else 0.0
    return KernelAudit(spec.label, D, (lo, hi), float(seg.max()), seg.tolist(), slope)


def green_sum(spec: Family, o=None, horizon: int = 0) -> list[float]:
    """Partial sums sum_{j <= h} j p^(j)(o, o) for h = 0..horizon."""
    pn = pn_sequence(spec, o, horizon)
    terms = [j * p for j, p in enumerate(pn)]
    return [math.fsum(terms[: h + 1]) for h in range(horizon + 1)]


def _mass_matrix(dists: list[SparseDist]):
    width = max(d.states.shape[1] for d in dists)
    stacked = np.concatenate([_pad(d.states, width) for d in dists])
    codes = pack_rows(stacked)
    uniq, first, inv = np.unique(codes, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    mat = np.zeros((len(dists), len(uniq)))
    pos = 0
    for i, d in enumerate(dists):
        mat[i, inv[pos: pos + len(d.mass)]] = d.mass
        pos += len(d.mass)
    sizes = dists[0].quotient.sizes(stacked[first])
    return mat, sizes


def truncated_er(spec: Family, o=None, horizon: int = 0) -> float:
    """sum_{i,j <= horizon} <mu_i, mu_j>, the exact mean of R over that window."""
    dists = propagate(spec, o, horizon)
    mat, sizes = _mass_matrix(dists)
    scaled = mat / sizes
    terms = []
    for i in range(horizon + 1):
        for j in range(i, horizon + 1):
            # np.sum is pairwise; fsum below compensates across pairs
            ip = float(np.sum(scaled[i] * mat[j]))
            terms.append(ip if i == j else 2.0 * ip)
    return math.fsum(terms)


def tail_bound(d_max: int, K: float, D: float, horizon: int) -> float:
    """d * K * sum_{l > horizon} (l + 1) l^{-D/2}."""
    s = D / 2.0
    if s - 1.0 <= 1.0:
        raise TailUnavailable(f"tail series diverges for D = {D}; need D >= 5")
    return float(d_max * K * (zeta(s - 1.0, horizon + 1) + zeta(s, horizon + 1)))


def expected_intersections(spec: Family, o=None, horizon: int = 0, D: float | None = None,
                           K: float | None = None) -> tuple[float, float | None]:
    """(er_truncated, er_tail_bound); the tail is None when it cannot be bounded."""
    er = truncated_er(spec, o, horizon)
    D = _audit_degree(spec) if D is None else D
    if D is None or D < 5:
        return er, None
    if K is None:
        K = heat_kernel_audit(spec, D, (1, max(horizon, 1))).sup_ratio
    return er, tail_bound(spec.d_max, K, D, horizon)


def _audit_degree(spec: Family) -> float | None:
    # super-polynomial growth satisfies V(n) >= C n^5, so D = 5 is admissible
    return 5 if spec.growth_degree is None else spec.growth_degree


def kernel_audit(spec: Family, D: float | None = None, horizon: int = 64,
                 n_range: tuple[int, int] | None = None) -> KernelAudit:
    """Full audit: sup-ratio curve, Green partial sums, truncated E(R), tail, c_hat."""
    D = _audit_degree(spec) if D is None else D
    n_range = (1, horizon) if n_range is None else n_range
    audit = heat_kernel_audit(spec, D, n_range)
    audit.green_partial = green_sum(spec, None, horizon)
    audit.er_truncated = truncated_er(spec, None, horizon)
    if D >= 5:
        K = audit.sup_ratio if n_range == (1, horizon) else heat_kernel_audit(spec, D, (1, horizon)).sup_ratio
        audit.er_tail_bound = tail_bound(spec.d_max, K, D, horizon)
    audit.c_hat, audit.certified = c_lower_bound(audit)
    return audit


def c_lower_bound(audit: KernelAudit) -> tuple[float, bool]:
    """(c_hat, certified). Uncertified falls back to 1 / er_truncated."""
    if audit.er_truncated is None:
        raise ValueError("audit carries no E(R) value")
    if audit.er_tail_bound is None:
        return 1.0 / audit.er_truncated, False
    return 1.0 / (audit.er_truncated + audit.er_tail_bound), True


@dataclass
class GrowthFit:
    family: str
    n_range: tuple[int, int]
    D_fit: float
    residual: float
    super_polynomial: bool
    classification: str
    sizes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n_range": list(self.n_range),
            "D_fit": self.D_fit,
            "residual": self.residual,
            "super_polynomial": self.super_polynomial,
            "classification": self.classification,
            "ball_sizes": [str(v) if v > 2**53 else v for v in self.sizes],
        }


DEFAULT_GROWTH_RANGE = {"Heisenberg": (8, 24), "FreeGroup": (2, 12)}


def default_growth_range(spec: Family) -> tuple[int, int]:
    return DEFAULT_GROWTH_RANGE.get(type(spec).__name__, (10, 40))


def volume_growth_degree(spec: Family, n_range: tuple[int, int] | None = None) -> GrowthFit:
    """Least-squares slope of log V(n) against log n, with a regime label.

    Super-polynomial growth is flagged when the local log-log slope at the top
    of the range exceeds 1.5 times the one at the bottom; polynomial growth
    drifts only by lower-order terms.
    """
    lo, hi = default_growth_range(spec) if n_range is None else n_range
    if not 1 <= lo < hi:
        raise ValueError("n_range must satisfy 1 <= lo < hi")
    sizes = ball_sizes(spec, None, hi)
    ns = np.arange(lo, hi + 1, dtype=float)
    logv = np.log(np.asarray([float(v) for v in sizes[lo: hi + 1]]))
    logn = np.log(ns)
    coef = np.polyfit(logn, logv, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, logn) - logv) ** 2)))
    span = max(2, (hi - lo) // 4)
    s_lo = least_squares_slope(logn[: span + 1], logv[: span + 1])
    s_hi = least_squares_slope(logn[-span - 1:], logv[-span - 1:])
    superpoly = s_hi > 1.5 * s_lo
    d_fit = float(coef[0])
    if superpoly or d_fit >= 4.5:
        cls = "covered"
    elif d_fit >= 2.5:
        cls = "transient-uncovered"
    else:
        cls = "recurrent"
    return GrowthFit(spec.label, (lo, hi), d_fit, resid, bool(superpoly), cls, list(sizes))


def monte_carlo_R(spec: Family, o=None, horizon: int = 64, pairs: int = 10_000,
                  master_seed: int = 0) -> tuple[float, float]:
    """Mean and standard error of R over independent walk pairs on [0, horizon]^2."""
    vals = np.empty(pairs)
    for r in range(pairs):
        ts = simulate_two_sided(spec, o, horizon, RngStream(master_seed, stream_id_for("R", r)))
        vals[r] = intersection_count(ts.forward, ts.backward)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(pairs))
