"""``cutwalk run | validate | families``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from cutwalk.graphs import (
    CapacityError,
    FreeGroup,
    Heisenberg,
    Lattice,
    LatticeCrossFinite,
    path_graph,
)
from cutwalk.kernel import volume_growth_degree

from .config import ConfigError, load_config
from .experiments import RefusalError, run
from .report import EmitError, emit

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_REFUSAL = 4

log = logging.getLogger("cutwalk")

BUILTIN_FAMILIES = [
    ("lattice:1", Lattice(1)),
    ("lattice:2", Lattice(2)),
    ("lattice:3", Lattice(3)),
    ("lattice:4", Lattice(4)),
    ("lattice:5", Lattice(5)),
    ("lattice:6", Lattice(6)),
    ("heisenberg", Heisenberg()),
    ("lattice_x_finite:1:path:3", LatticeCrossFinite(1, path_graph(3))),
    ("lattice_x_finite:3:path:3", LatticeCrossFinite(3, path_graph(3))),
    ("free_group:2", FreeGroup(2)),
]


def _workers(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("CUTWALK_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer CUTWALK_WORKERS=%r", env)
    return 1


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.output or cfg.output_path
    fmt = args.format or cfg.format
    report = run(cfg, _workers(args.workers))
    paths = emit(report, out, fmt, include_timing=cfg.record_timing)
    print(f"wrote {', '.join(str(p) for p in paths)} in {report.wall_clock:.2f}s", file=sys.stderr)
    failed = [c["name"] for c in report.comparisons if not c["holds"]]
    if failed:
        print(f"comparisons not holding: {', '.join(failed)}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_families(args) -> int:
    print(f"{'family':<28} {'orbits':>6} {'d_max':>5} {'D_fit':>7}  classification")
    for name, fam in BUILTIN_FAMILIES:
        fit = volume_growth_degree(fam)
        tag = fit.classification + (" (super-polynomial)" if fit.super_polynomial else "")
        print(f"{name:<28} {fam.orbit_count:>6} {fam.d_max:>5} {fit.D_fit:>7.3f}  {tag}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cutwalk", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the experiment described by a config file")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=None,
                   help="replicate-level processes (default: $CUTWALK_WORKERS or 1)")
    p.add_argument("--output", default=None, help="override output_path")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="parse and check a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("families", help="list built-in families with their growth classification")
    p.set_defaults(func=cmd_families)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except RefusalError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except EmitError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
