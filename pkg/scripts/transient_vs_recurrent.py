"""Cut-count growth on a covered family next to a recurrent control.

Runs count_growth on Z^5 and recurrent_control on Z^2 with the same ladder
and reports count(N)/count(N/8) for both. Transient walks should scale
roughly linearly; the recurrent ratio should fall well short of it.
"""

from __future__ import annotations

import argparse
import tempfile
from dataclasses import dataclass
from pathlib import Path

from cutwalk.expcli import parse_config_text, run


@dataclass
class LadderConfig:
    horizon: int = 40_000
    ladder: int = 4
    replicates: int = 100
    master_seed: int = 2024
    workers: int = 1


def _cfg(c: LadderConfig, dim: int, experiment: str, out: Path):
    return parse_config_text(
        f"family = lattice\ndim = {dim}\nexperiment = {experiment}\nhorizon = {c.horizon}\n"
        f"ladder = {c.ladder}\nreplicates = {c.replicates}\nmaster_seed = {c.master_seed}\n"
        f"output_path = {out}\n"
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=LadderConfig.horizon)
    ap.add_argument("--replicates", type=int, default=LadderConfig.replicates)
    ap.add_argument("--workers", type=int, default=LadderConfig.workers)
    args = ap.parse_args()
    c = LadderConfig(horizon=args.horizon, replicates=args.replicates, workers=args.workers)

    tmp = Path(tempfile.mkdtemp())
    rows = {}
    for label, dim, exp in (("Z^5", 5, "count_growth"), ("Z^2", 2, "recurrent_control")):
        rep = run(_cfg(c, dim, exp, tmp / f"{label}.json"), c.workers)
        rows[label] = rep.results["ladder"]
        print(label)
        for row in rep.results["ladder"]:
            print(f"  N={row['horizon']:>7}  mean count {row['mean_count']:10.2f}")
    r5 = rows["Z^5"][-1]["mean_count"] / rows["Z^5"][0]["mean_count"]
    r2 = rows["Z^2"][-1]["mean_count"] / rows["Z^2"][0]["mean_count"]
    span = 2 ** (c.ladder - 1)
    print(f"count ratio over x{span} horizon: Z^5 {r5:.2f}, Z^2 {r2:.2f}")


if __name__ == "__main__":
    main()
