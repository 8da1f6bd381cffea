import json
import os

import pytest

from omnisurf.cli import main
from omnisurf.experiments import (
    ExperimentKind,
    ExperimentSpec,
    compute_artifacts,
    render_polar_csv,
    s21_campaign,
)
from omnisurf import ElementResponseTable, SphericalAngle, Side, InteractionMode, SurfaceConfiguration
from omnisurf import far_field_pattern
from omnisurf.scenario_io import parse_scenario
from omnisurf.experiments import bundled_scenario_text


def read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def data_rows(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")][1:]


def test_polar_csv_flat_sweep_is_zero_db(make_scenario):
    s = make_scenario(1, 1, n=0, tab=ElementResponseTable.constant(0, 0))
    sweep = far_field_pattern(s, SurfaceConfiguration.uniform(1), SphericalAngle(20), Side.REFLECTION,
                              InteractionMode.REFLECT)
    text = render_polar_csv(sweep, scenario_id="abc")
    assert "# scenario_hash=abc" in text
    assert {r.split(",")[2] for r in data_rows(text)} == {"0.000000"}


def test_polar_csv_normalization():
    import numpy as np
    from omnisurf.beamforming import PatternSweep, SweepGrid
    sweep = PatternSweep(InteractionMode.REFLECT, SphericalAngle(0), Side.REFLECTION, SweepGrid(0, 1, 1, (0,)),
                         np.array([0.0, 1.0]), np.array([0.0, 0.0]), np.array([2.0 + 0j, 0.2 + 0j]))
    rows = data_rows(render_polar_csv(sweep))
    assert rows[0].split(",")[2] == "0.000000"
    assert rows[1].split(",")[2] == "-20.000000"


@pytest.mark.parametrize("argv", [
    ["pattern", "--scenario", "builtin:roundtrip_3x3", "--incident", "60", "--target", "35,180"],
    ["pattern", "--scenario", "builtin:roundtrip_3x3", "--incident", "30", "--config", "101010101", "--full-sweep"],
    ["beamform", "--scenario", "builtin:roundtrip_3x3", "--incident", "60", "--target", "35,180"],
    ["recip-channel", "--scenario", "builtin:roundtrip_3x3", "--seed", "4"],
    ["recip-channel", "--random", "20", "--seed", "9"],
    ["recip-beam", "--scenario", "builtin:roundtrip_3x3"],
    ["compare-models", "--scenario", "builtin:roundtrip_3x3", "--target", "32,180", "--target", "20,180"],
    ["s21-campaign"],
    ["gen-random", "--count", "3", "--seed", "5"],
])
def test_cli_runs_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    names = sorted(os.listdir(a))
    assert names and names == sorted(os.listdir(b))
    for n in names:
        assert read(a / n) == read(b / n), n


def test_campaign_independent_of_workers(tmp_path):
    assert main(["recip-channel", "--random", "40", "--seed", "2", "--workers", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(["recip-channel", "--random", "40", "--seed", "2", "--workers", "4", "--out", str(tmp_path / "b")]) == 0
    assert read(tmp_path / "a" / "campaign.csv") == read(tmp_path / "b" / "campaign.csv")
    assert read(tmp_path / "a" / "verdict.txt").startswith("PASS")


def test_reciprocity_csv_layout(tmp_path):
    assert main(["recip-channel", "--scenario", "builtin:roundtrip_3x3", "--out", str(tmp_path)]) == 0
    lines = read(tmp_path / "reciprocity.csv").splitlines()
    assert lines[0] == "k,u,direction,re,im,abs,phase_deg"
    assert lines[1].startswith("0,0,downlink,") and lines[2].startswith("0,0,uplink,")
    assert lines[-1].startswith("# max_rel_err=") and lines[-1].endswith("verdict=PASS")
    assert read(tmp_path / "verdict.txt").split()[0] == "PASS"


def test_beam_reciprocity_log(tmp_path):
    argv = ["recip-beam", "--scenario", "builtin:roundtrip_3x3", "--incident", "60", "--out", str(tmp_path)]
    assert main(argv) == 0
    assert main(argv) == 0
    entries = [json.loads(ln) for ln in read(tmp_path / "beam_reciprocity.jsonl").splitlines()]
    assert len(entries) == 2 and entries[0] == entries[1]
    e = entries[0]
    assert e["theta0"] == 60.0 and e["verdict"] == "non-reciprocal"
    assert e["theta2"] < 60.0 - e["grid_step"]


def test_s21_campaign_rows_equal():
    scn = parse_scenario(bundled_scenario_text("s21_replica.ini"))
    rows = s21_campaign(scn)
    assert len(rows) == 16
    assert {r.config_id for r in rows} == {1, 2, 3, 4}
    assert {(r.antenna2_deg, r.antenna2_side) for r in rows} == {
        (30.0, Side.REFLECTION), (45.0, Side.REFLECTION), (30.0, Side.REFRACTION), (45.0, Side.REFRACTION)}
    assert all(r.equal and r.rel_err <= 1e-10 for r in rows)


def test_gen_random_files_parse(tmp_path):
    assert main(["gen-random", "--count", "2", "--seed", "1", "--out", str(tmp_path)]) == 0
    for n in sorted(os.listdir(tmp_path)):
        assert parse_scenario(read(tmp_path / n)).num_elements >= 1


@pytest.mark.parametrize("argv,code,tag", [
    (["pattern", "--scenario", "missing.ini", "--incident", "30"], 2, "E_CONFIG"),
    (["pattern", "--scenario", "builtin:roundtrip_3x3", "--incident", "95"], 3, "E_DOMAIN"),
    (["pattern", "--scenario", "builtin:roundtrip_3x3", "--incident", "30", "--config", "1"], 2, "E_CONFIG"),
    (["beamform", "--scenario", "builtin:roundtrip_3x3", "--incident", "10", "--target", "x"], 2, "E_CONFIG"),
    (["pattern", "--scenario", "builtin:roundtrip_3x3", "--incident", "30", "--set", "ios.rows=0"], 2, "E_CONFIG"),
])
def test_cli_failures(tmp_path, capsys, argv, code, tag):
    out = tmp_path / "o"
    assert main(argv + ["--out", str(out)]) == code
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith(f"error {tag}:")
    assert not out.exists()


def test_cli_io_failure(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["s21-campaign", "--out", str(blocker / "sub")]) == 4
    assert capsys.readouterr().err.startswith("error E_IO:")


def test_table_env_override(tmp_path, monkeypatch):
    table = tmp_path / "t.csv"
    table.write_text("state,mode,theta_deg,psi_deg,beta\n" + "".join(
        f"{s},{m},{t},{0 if s == 'ON' else 180},1\n" for s in ("ON", "OFF") for m in ("reflect", "refract")
        for t in (0, 10, 20)))
    monkeypatch.setenv("IOS_TABLE_PATH", str(table))
    spec = ExperimentSpec(ExperimentKind.PATTERN, str(tmp_path / "o"), "builtin:roundtrip_3x3",
                          {"incident": "10", "config": "111111111"})
    with_env = compute_artifacts(spec)
    monkeypatch.delenv("IOS_TABLE_PATH")
    without = compute_artifacts(spec)
    key = str(tmp_path / "o" / "pattern.csv")
    assert with_env[key].splitlines()[0] != without[key].splitlines()[0]
