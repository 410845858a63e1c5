import json
import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutwalk.expcli import ConfigError, RefusalError, emit, parse_config_text, run
from cutwalk.expcli.cli import main
from cutwalk.expcli.config import parse_finite
from cutwalk.expcli.report import EmitError, SummaryReport, comparison, flatten, render_csv, render_json

BASE = """
family = {family}
{extra}
experiment = {experiment}
horizon = {horizon}
replicates = {replicates}
master_seed = 17
output_path = {out}
"""


def cfg_text(tmp_path, family="lattice", experiment="cut_density", horizon=400, replicates=6,
             extra="dim = 3", name="out.json", **more):
    text = BASE.format(family=family, extra=extra, experiment=experiment, horizon=horizon,
                       replicates=replicates, out=tmp_path / name)
    for k, v in more.items():
        text += f"{k} = {v}\n"
    return text


def test_parse_headerless_and_defaults(tmp_path):
    cfg = parse_config_text(cfg_text(tmp_path))
    assert cfg.family.build().label == "Lattice(3)"
    assert cfg.stability_window == 200 and cfg.format == "json"
    cfg2 = parse_config_text("[run]\n" + cfg_text(tmp_path, name="x.csv"))
    assert cfg2.format == "csv"


@pytest.mark.parametrize("bad", [
    {"horizon": 1},
    {"replicates": 0},
    {"stability_window": 500},
    {"experiment": "nope"},
    {"colour": "blue"},
    {"family": "torus"},
])
def test_config_errors(tmp_path, bad):
    kwargs = {k: v for k, v in bad.items() if k in ("horizon", "replicates", "experiment", "family")}
    more = {k: v for k, v in bad.items() if k not in kwargs}
    with pytest.raises(ConfigError):
        parse_config_text(cfg_text(tmp_path, **kwargs, **more))


def test_missing_key(tmp_path):
    text = "\n".join(l for l in cfg_text(tmp_path).splitlines() if not l.startswith("master_seed"))
    with pytest.raises(ConfigError, match="master_seed"):
        parse_config_text(text)


def test_bad_orbit_declaration(tmp_path):
    text = cfg_text(tmp_path, family="lattice_x_finite", extra="dim = 1\nfinite = path:3\nfinite_classes = 0 0 0")
    with pytest.raises(ConfigError, match="orbit"):
        parse_config_text(text)


def test_parse_finite():
    assert parse_finite("0-1,1-2") == parse_finite("path:3") == ((1,), (0, 2), (1,))
    assert parse_finite("cycle:3") == ((1, 2), (0, 2), (0, 1))
    with pytest.raises(ConfigError):
        parse_finite("0-1-2")


def test_flatten_dotted():
    flat = flatten({"a": {"b": 1, "c": [2, {"d": 3}]}, "e": []})
    assert flat == {"a.b": 1, "a.c.0": 2, "a.c.1.d": 3, "e": ""}


def test_render_formats():
    rep = SummaryReport({"x": 1}, {"v": 0.1 + 0.2, "nan": float("nan"), "s": 'a,"b"'},
                        [comparison("c", "l", 1.0, ">=", "r", 2.0, 1.5)])
    data = json.loads(render_json(rep))
    assert data["results"]["v"] == 0.1 + 0.2 and data["results"]["nan"] is None
    assert data["comparisons"][0]["holds"] is True
    csv_text = render_csv(rep)
    header, row = csv_text.split("\r\n")[:2]
    assert "results.v" in header.split(",")
    assert '"a,""b"""' in row
    assert "wall_clock_seconds" not in render_json(rep)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_json_float_roundtrip(x):
    rep = SummaryReport({}, {"x": x})
    assert json.loads(render_json(rep))["results"]["x"] == x


def test_emit_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(EmitError, match="file"):
        emit(SummaryReport({}, {}), blocker / "sub" / "out.json", "json")


def test_refusal_on_recurrent(tmp_path):
    for exp in ("cut_density", "count_growth"):
        for dim in (1, 2):
            with pytest.raises(RefusalError):
                run(parse_config_text(cfg_text(tmp_path, experiment=exp, extra=f"dim = {dim}")))
    rep = run(parse_config_text(cfg_text(tmp_path, experiment="recurrent_control", extra="dim = 2",
                                         horizon=800, ladder=3)))
    assert len(rep.results["ladder"]) == 3


def test_cut_density_small(tmp_path):
    rep = run(parse_config_text(cfg_text(tmp_path, horizon=2000, replicates=8, extra="dim = 5",
                                         kernel_horizon=16)))
    r = rep.results
    assert r["star_orbit"]["orbit"] == 0
    assert 0 < r["density_pooled"] < 1
    assert r["kernel"]["certified"]
    names = [c["name"] for c in rep.comparisons]
    assert names == ["density_positive", "density_vs_c_hat"]
    for c in rep.comparisons:
        assert {"lhs_name", "rhs_name", "margin"} <= set(c)


def test_ladder_of_one_matches_cut_density(tmp_path):
    dens = run(parse_config_text(cfg_text(tmp_path, horizon=600, replicates=5, kernel_horizon=8)))
    growth = run(parse_config_text(cfg_text(tmp_path, experiment="count_growth", horizon=600,
                                            replicates=5, ladder=1)))
    assert growth.results["ladder"][0]["mean_count"] * 5 == dens.results["cut_taus_total"]


def test_kernel_audit_lattice1(tmp_path):
    rep = run(parse_config_text(cfg_text(tmp_path, experiment="kernel_audit", horizon=30, extra="dim = 1")))
    assert rep.results["closed_form_max_error"] <= 1e-12
    assert {s[0] for s in rep.series} == {"r_curve", "green"}


def test_orbit_audit(tmp_path):
    rep = run(parse_config_text(cfg_text(tmp_path, experiment="orbit_audit", extra="dim = 2")))
    assert rep.results["chain"]["matrix"] == [[1.0]]
    rep = run(parse_config_text(cfg_text(tmp_path, experiment="orbit_audit", family="lattice_x_finite",
                                         extra="dim = 1\nfinite = path:3", horizon=5000, replicates=8)))
    assert rep.results["irreducible"] and all(c["holds"] for c in rep.comparisons)


def test_g_estimation_monotone(tmp_path):
    rep = run(parse_config_text(cfg_text(tmp_path, experiment="g_estimation", horizon=64, replicates=100)))
    assert all(o["non_increasing"] for o in rep.results["per_orbit"])


def _cli_run(tmp_path, text, *args):
    path = tmp_path / "c.ini"
    path.write_text(text)
    return main(["run", str(path), *args])


def test_cli_exit_codes(tmp_path, capsys):
    assert _cli_run(tmp_path, cfg_text(tmp_path, experiment="kernel_audit", horizon=10)) == 0
    assert _cli_run(tmp_path, cfg_text(tmp_path, horizon=1)) == 2
    assert _cli_run(tmp_path, cfg_text(tmp_path, extra="dim = 2")) == 4
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert _cli_run(tmp_path, cfg_text(tmp_path, experiment="kernel_audit", horizon=10),
                    "--output", str(blocker / "x.json")) == 1
    heavy = cfg_text(tmp_path, experiment="kernel_audit", horizon=400, family="heisenberg", extra="")
    assert _cli_run(tmp_path, heavy) == 3
    assert main(["validate", str(tmp_path / "c.ini")]) == 0
    assert main(["families"]) == 0
    assert "free_group:2" in capsys.readouterr().out


def test_workers_env(tmp_path, monkeypatch):
    from cutwalk.expcli.cli import _workers

    monkeypatch.setenv("CUTWALK_WORKERS", "3")
    assert _workers(None) == 3 and _workers(2) == 2
    monkeypatch.setenv("CUTWALK_WORKERS", "x")
    assert _workers(None) == 1


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_byte_identical_across_workers(tmp_path, fmt):
    text = cfg_text(tmp_path, family="lattice_x_finite", extra="dim = 3\nfinite = path:3",
                    horizon=500, replicates=6, name=f"o.{fmt}", g_horizon=40, g_replicates=30, g_seeds=2,
                    kernel_horizon=8)
    outs = []
    for w in (1, 3):
        assert _cli_run(tmp_path, text, "--workers", str(w), "--output", str(tmp_path / f"w{w}.{fmt}")) == 0
        outs.append((tmp_path / f"w{w}.{fmt}").read_bytes())
    assert outs[0] == outs[1]


def test_comment_before_header(tmp_path):
    text = "# note\n[experiment]\n" + cfg_text(tmp_path)
    assert parse_config_text(text).horizon == 400
    assert parse_config_text("# note\n" + cfg_text(tmp_path)).horizon == 400
