"""Experiment configuration: flat key = value files, one experiment per file."""

from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass
from pathlib import Path

from cutwalk.graphs import (
    Family,
    FreeGroup,
    Heisenberg,
    Lattice,
    LatticeCrossFinite,
    OrbitDeclarationError,
    cycle_graph,
    path_graph,
)

EXPERIMENTS = (
    "cut_density",
    "count_growth",
    "kernel_audit",
    "g_estimation",
    "orbit_audit",
    "recurrent_control",
)
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class FamilySpec:
    """Declarative family description as written in a config file."""

    kind: str
    dim: int = 0
    rank: int = 0
    finite: str = ""
    finite_classes: tuple[int, ...] | None = None

    def build(self) -> Family:
        try:
            if self.kind == "lattice":
                return Lattice(self.dim)
            if self.kind == "heisenberg":
                return Heisenberg()
            if self.kind == "free_group":
                return FreeGroup(self.rank)
            if self.kind == "lattice_x_finite":
                return LatticeCrossFinite(self.dim, parse_finite(self.finite), self.finite_classes)
        except OrbitDeclarationError as exc:
            raise ConfigError(f"orbit declaration: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown family {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "lattice":
            return f"lattice:{self.dim}"
        if self.kind == "free_group":
            return f"free_group:{self.rank}"
        if self.kind == "lattice_x_finite":
            return f"lattice_x_finite:{self.dim}:{self.finite}"
        return self.kind


def parse_finite(text: str) -> tuple[tuple[int, ...], ...]:
    """``path:3``, ``cycle:4`` or an edge list ``0-1,1-2``."""
    text = text.strip()
    if text.startswith("path:"):
        return path_graph(int(text[5:]))
    if text.startswith("cycle:"):
        return cycle_graph(int(text[6:]))
    try:
        edges = [tuple(int(v) for v in e.split("-")) for e in text.replace(" ", "").split(",") if e]
    except ValueError as exc:
        raise ConfigError(f"cannot parse finite graph {text!r}") from exc
    if not edges or any(len(e) != 2 for e in edges):
        raise ConfigError(f"cannot parse finite graph {text!r}")
    m = max(max(e) for e in edges) + 1
    adj: list[set[int]] = [set() for _ in range(m)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return tuple(tuple(sorted(s)) for s in adj)


@dataclass(frozen=True)
class ExperimentConfig:
    family: FamilySpec
    experiment: str
    horizon: int
    replicates: int
    master_seed: int
    stability_window: int
    output_path: str
    format: str
    # experiment-specific knobs
    ladder: int = 4
    kernel_horizon: int = 64
    kernel_degree: float | None = None
    audit_from: int = 1
    g_horizon: int = 1000
    g_replicates: int = 200
    g_seeds: int = 5
    record_timing: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.describe()
        return d


_INT_KEYS = ("horizon", "replicates", "master_seed", "stability_window", "ladder",
             "kernel_horizon", "audit_from", "g_horizon", "g_replicates", "g_seeds", "dim", "rank")


def parse_config_text(text: str) -> ExperimentConfig:
    if not re.search(r"^\s*\[", text, re.M):
        text = "[experiment]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if len(parser.sections()) != 1:
        raise ConfigError("config must hold exactly one experiment section")
    raw = dict(parser[parser.sections()[0]])
    return config_from_mapping(raw)


def config_from_mapping(raw: dict) -> ExperimentConfig:
    raw = {k.strip().lower(): str(v).strip() for k, v in raw.items()}
    known = set(_INT_KEYS) | {"family", "experiment", "output_path", "format", "finite",
                              "finite_classes", "kernel_degree", "record_timing"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    ints = {}
    for key in _INT_KEYS:
        if key in raw:
            try:
                ints[key] = int(raw[key].replace("_", ""))
            except ValueError as exc:
                raise ConfigError(f"{key} must be an integer, got {raw[key]!r}") from exc
    for key in ("family", "experiment", "horizon", "replicates", "master_seed", "output_path"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    classes = None
    if raw.get("finite_classes"):
        try:
            classes = tuple(int(c) for c in raw["finite_classes"].replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError("finite_classes must be integers") from exc
    fam = FamilySpec(raw["family"].lower(), ints.get("dim", 0), ints.get("rank", 0),
                     raw.get("finite", ""), classes)
    fam.build()
    horizon = ints["horizon"]
    cfg = ExperimentConfig(
        family=fam,
        experiment=raw["experiment"].lower(),
        horizon=horizon,
        replicates=ints["replicates"],
        master_seed=ints["master_seed"],
        stability_window=ints.get("stability_window", horizon // 2),
        output_path=raw["output_path"],
        format=raw.get("format", Path(raw["output_path"]).suffix.lstrip(".") or "json").lower(),
        ladder=ints.get("ladder", 4),
        kernel_horizon=ints.get("kernel_horizon", 64),
        kernel_degree=float(raw["kernel_degree"]) if raw.get("kernel_degree") else None,
        audit_from=ints.get("audit_from", 1),
        g_horizon=ints.get("g_horizon", 1000),
        g_replicates=ints.get("g_replicates", 200),
        g_seeds=ints.get("g_seeds", 5),
        record_timing=raw.get("record_timing", "false").lower() in ("1", "true", "yes", "on"),
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.horizon < 2:
        raise ConfigError("horizon must be at least 2")
    if cfg.replicates < 1:
        raise ConfigError("replicates must be at least 1")
    if not 0 <= cfg.stability_window <= cfg.horizon:
        raise ConfigError("stability_window must lie in [0, horizon]")
    if not 0 <= cfg.master_seed < 2**64:
        raise ConfigError("master_seed must be an unsigned 64-bit integer")
    if cfg.ladder < 1:
        raise ConfigError("ladder must be at least 1")
    if cfg.experiment in ("count_growth", "recurrent_control", "g_estimation") and cfg.horizon >> (cfg.ladder - 1) < 2:
        raise ConfigError("horizon too small for the requested ladder")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
