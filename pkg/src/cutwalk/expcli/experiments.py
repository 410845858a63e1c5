"""Experiment runners. Each is a pure function of (config, master_seed)."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from cutwalk.cuts import cut_times_from_labels
from cutwalk.graphs import Family, Lattice
from cutwalk.kernel import kernel_audit, pn_sequence, volume_growth_degree
from cutwalk.orbitchain import (
    estimate_g_ladder,
    orbit_transition_matrix,
    orbit_visit_counts,
    select_star_orbit,
    star_orbit_stability,
    tau_times,
)
from cutwalk.stats import mean_interval, wilson_interval
from cutwalk.walk import RngStream, path_labels, simulate_srw, stream_id_for

from .config import ExperimentConfig
from .report import SummaryReport, comparison


class RefusalError(RuntimeError):
    """The experiment is meaningless for this family."""


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [fn(j) for j in jobs]


def _stream(cfg: ExperimentConfig, tag: str, r: int) -> RngStream:
    # shared across experiments so that equal seeds replay equal walks
    return RngStream(cfg.master_seed, stream_id_for(tag, r))


def _ladder(cfg: ExperimentConfig) -> list[int]:
    return [cfg.horizon >> (cfg.ladder - 1 - i) for i in range(cfg.ladder)]


def _window(cfg: ExperimentConfig, horizon: int) -> int:
    # the configured window scales with the horizon on ladders
    return (cfg.stability_window * horizon) // cfg.horizon


def _classify(family: Family) -> dict:
    return volume_growth_degree(family).to_dict()


def _certify(cfg: ExperimentConfig, family: Family) -> dict:
    audit = kernel_audit(family, cfg.kernel_degree, cfg.kernel_horizon)
    return {
        "c_hat": audit.c_hat,
        "certified": audit.certified,
        "er_truncated": audit.er_truncated,
        "er_tail_bound": audit.er_tail_bound,
        "kernel_horizon": cfg.kernel_horizon,
        "D": audit.D,
        "sup_ratio": audit.sup_ratio,
    }


def _star_orbit(cfg: ExperimentConfig, family: Family, workers: int) -> dict:
    if family.orbit_count == 1:
        return {"orbit": 0, "stable": True, "picks": [0]}
    seeds = [cfg.master_seed ^ stream_id_for("star-seed", s) for s in range(cfg.g_seeds)]
    orbit, stable, picks = star_orbit_stability(family, cfg.g_horizon, cfg.g_replicates, seeds, workers)
    return {"orbit": orbit, "stable": stable, "picks": picks,
            "note": "" if stable else "statistically indeterminate; first pick used"}


# ---------------------------------------------------------------------------
# per-replicate workers (top level so they pickle)


def _cut_density_rep(args):
    family, horizon, window, target, stream = args
    traj = simulate_srw(family, None, horizon, stream)
    (labels,) = path_labels(traj)
    cuts = cut_times_from_labels(labels)
    taus = tau_times(traj, target)
    taus = taus[taus <= horizon - window]
    hits = int(np.isin(taus, cuts).sum())
    return len(taus), hits


def _ladder_rep(args):
    family, horizons, windows, stream = args
    traj = simulate_srw(family, None, horizons[-1], stream)
    (labels,) = path_labels(traj)
    out = []
    for h, w in zip(horizons, windows):
        # relabelling is unnecessary: labels of a prefix stay injective
        cuts = cut_times_from_labels(labels[: h + 1])
        out.append(int((cuts <= h - w).sum()))
    return out


def _occupancy_rep(args):
    family, horizon, stream = args
    traj = simulate_srw(family, None, horizon, stream)
    return orbit_visit_counts(traj).tolist()


# ---------------------------------------------------------------------------


def run_cut_density(cfg: ExperimentConfig, workers: int = 1) -> SummaryReport:
    family = cfg.family.build()
    growth = _classify(family)
    if growth["classification"] == "recurrent":
        raise RefusalError(
            f"{family.label} is recurrent (D_fit={growth['D_fit']:.2f}); recurrent walks have no "
            "cut times, use experiment = recurrent_control"
        )
    star = _star_orbit(cfg, family, workers)
    W = cfg.stability_window
    jobs = [(family, cfg.horizon, W, star["orbit"], _stream(cfg, "walk", r)) for r in range(cfg.replicates)]
    rows = _map(_cut_density_rep, jobs, workers)
    windowed = np.array([r[0] for r in rows])
    hits = np.array([r[1] for r in rows])
    pooled = int(hits.sum()) / max(1, int(windowed.sum()))
    wlo, whi = wilson_interval(int(hits.sum()), max(1, int(windowed.sum())))
    per_rep = hits[windowed > 0] / windowed[windowed > 0]
    mean, se, (nlo, nhi) = mean_interval(per_rep)
    results = {
        "growth": growth,
        "star_orbit": star,
        "windowed_taus_total": int(windowed.sum()),
        "cut_taus_total": int(hits.sum()),
        "density_pooled": pooled,
        "density_pooled_wilson95": [wlo, whi],
        "density_mean": mean,
        "density_se": se,
        "density_mean_normal95": [nlo, nhi],
        "ci_excludes_zero": bool(wlo > 0 and nlo > 0),
    }
    comps = [comparison("density_positive", "density_mean_normal95.low", nlo, ">", "zero", 0.0)]
    cert = _certify(cfg, family)
    results["kernel"] = cert
    if cert["certified"]:
        comps.append(comparison("density_vs_c_hat", "density_mean", mean, ">=", "c_hat", cert["c_hat"], 2 * se))
    return SummaryReport(cfg.to_dict(), results, comps)


def _ladder_counts(cfg: ExperimentConfig, family: Family, workers: int):
    horizons = _ladder(cfg)
    windows = [_window(cfg, h) for h in horizons]
    jobs = [(family, horizons, windows, _stream(cfg, "walk", r)) for r in range(cfg.replicates)]
    counts = np.asarray(_map(_ladder_rep, jobs, workers), dtype=float)
    return horizons, windows, counts


def run_count_growth(cfg: ExperimentConfig, workers: int = 1) -> SummaryReport:
    family = cfg.family.build()
    growth = _classify(family)
    if growth["classification"] == "recurrent":
        raise RefusalError(f"{family.label} is recurrent; use experiment = recurrent_control")
    horizons, windows, counts = _ladder_counts(cfg, family, workers)
    ladder = []
    for i, h in enumerate(horizons):
        mean, se, ci = mean_interval(counts[:, i])
        ladder.append({"horizon": h, "window": windows[i], "mean_count": mean, "se": se, "normal95": list(ci)})
    means = [row["mean_count"] for row in ladder]
    increasing = all(b > a for a, b in zip(means, means[1:]))
    results = {"growth": growth, "ladder": ladder, "strictly_increasing": increasing,
               "count_ratio_last_first": means[-1] / means[0] if means[0] > 0 else None}
    return SummaryReport(cfg.to_dict(), results, [])


def run_recurrent_control(cfg: ExperimentConfig, workers: int = 1) -> SummaryReport:
    family = cfg.family.build()
    horizons, windows, counts = _ladder_counts(cfg, family, workers)
    ladder = []
    for i, h in enumerate(horizons):
        per_step = counts[:, i] / (h - windows[i] + 1)
        mean, se, ci = mean_interval(per_step)
        cmean, cse, _ = mean_interval(counts[:, i])
        ladder.append({"horizon": h, "window": windows[i], "mean_per_step": mean, "se": se,
                       "normal95": list(ci), "mean_count": cmean, "count_se": cse})
    dens = [row["mean_per_step"] for row in ladder]
    results = {
        "growth": _classify(family),
        "ladder": ladder,
        "per_step_non_increasing": all(b <= a for a, b in zip(dens, dens[1:])),
        "count_ratio_last_first": (ladder[-1]["mean_count"] / ladder[0]["mean_count"]
                                   if ladder[0]["mean_count"] > 0 else None),
        "horizon_ratio_last_first": horizons[-1] / horizons[0],
    }
    return SummaryReport(cfg.to_dict(), results, [])


def run_kernel_audit(cfg: ExperimentConfig, workers: int = 1) -> SummaryReport:
    family = cfg.family.build()
    D = cfg.kernel_degree
    audit = kernel_audit(family, D, cfg.horizon, (cfg.audit_from, cfg.horizon))
    results = {"audit": audit.to_dict(), "growth": _classify(family)}
    pn = pn_sequence(family, None, cfg.horizon)
    results["pn"] = pn
    comps = [comparison("slope_non_positive", "slope", audit.slope, "<=", "zero", 0.0)]
    if isinstance(family, Lattice) and family.d == 1:
        err = max(abs(pn[2 * n] - math.comb(2 * n, n) / 4**n) for n in range(cfg.horizon // 2 + 1))
        results["closed_form_max_error"] = err
        comps.append(comparison("closed_form", "max_error", err, "<=", "tolerance", 1e-12))
    lo = cfg.audit_from
    series = [
        ("r_curve", ("n", "value"), [(lo + i, v) for i, v in enumerate(audit.r_curve)]),
        ("green", ("n", "value"), list(enumerate(audit.green_partial))),
    ]
    return SummaryReport(cfg.to_dict(), results, comps, series=series)


def run_orbit_audit(cfg: ExperimentConfig, workers: int = 1) -> SummaryReport:
    family = cfg.family.build()
    chain = orbit_transition_matrix(family)
    pi = chain.stationary()
    jobs = [(family, cfg.horizon, _stream(cfg, "walk", r)) for r in range(cfg.replicates)]
    counts = np.asarray(_map(_occupancy_rep, jobs, workers), dtype=float)
    frac = counts / (cfg.horizon + 1)
    occupancy = []
    comps = []
    for i in range(chain.k):
        mean, se, ci = mean_interval(frac[:, i]) if cfg.replicates > 1 else (frac[0, i], float("inf"), (0, 1))
        occupancy.append({"orbit": i, "mean": mean, "se": se, "normal95": list(ci),
                          "stationary": float(pi[i]), "all_positive": bool((counts[:, i] > 0).all())})
        comps.append(comparison(f"occupancy_{i}", "abs(mean - stationary)", abs(mean - pi[i]), "<=",
                                "3 * se", 3 * se))
    results = {
        "chain": chain.to_dict(),
        "row_sums": chain.row_sums().tolist(),
        "irreducible": chain.is_irreducible(),
        # orbit_transition_matrix raises on any disagreement between representatives
        "representative_independent": True,
        "stationary": pi.tolist(),
        "occupancy": occupancy,
    }
    header = ("from",) + tuple(f"to_{j}" for j in range(chain.k))
    rows = [(i, *chain.matrix[i].tolist()) for i in range(chain.k)]
    return SummaryReport(cfg.to_dict(), results, comps, series=[("matrix", header, rows)])


def run_g_estimation(cfg: ExperimentConfig, workers: int = 1) -> SummaryReport:
    family = cfg.family.build()
    horizons = _ladder(cfg)
    per_orbit = []
    top = []
    for orbit in range(family.orbit_count):
        ests = estimate_g_ladder(family, orbit, horizons, cfg.replicates,
                                 cfg.master_seed ^ stream_id_for("g", orbit), workers)
        ghats = [e.ghat for e in ests]
        per_orbit.append({"orbit": orbit, "ladder": [e.to_dict() for e in ests],
                          "non_increasing": all(b <= a for a, b in zip(ghats, ghats[1:]))})
        top.append(ests[-1])
    star = select_star_orbit(family, top)
    growth = _classify(family)
    results = {"per_orbit": per_orbit, "star_orbit": star, "growth": growth}
    comps = []
    cert = _certify(cfg, family) if growth["classification"] == "covered" else None
    if cert:
        results["kernel"] = cert
        best = top[star]
        comps.append(comparison("ghat_vs_c_hat", "ghat", best.ghat, ">=", "c_hat", cert["c_hat"],
                                2 * best.standard_error))
    return SummaryReport(cfg.to_dict(), results, comps)


RUNNERS = {
    "cut_density": run_cut_density,
    "count_growth": run_count_growth,
    "kernel_audit": run_kernel_audit,
    "g_estimation": run_g_estimation,
    "orbit_audit": run_orbit_audit,
    "recurrent_control": run_recurrent_control,
}


def run(cfg: ExperimentConfig, workers: int = 1) -> SummaryReport:
    t0 = time.perf_counter()
    report = RUNNERS[cfg.experiment](cfg, workers)
    report.wall_clock = time.perf_counter() - t0
    report.provenance = {
        "master_seed": cfg.master_seed,
        "stream_scheme": "Philox(SeedSequence(master_seed, spawn_key=(blake2b64(tag, replicate),)))",
    }
    return report
