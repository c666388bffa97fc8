import csv
import json
from pathlib import Path

import pytest

from evtwin.cli import main

CONFIG = """\
seed: {seed}
synthetic_town:
  n_buildings: 30
mobility:
  use_default_mode_choice: true
"""


def write_config(tmp: Path, seed: int = 5) -> Path:
    p = tmp / "c.yaml"
    p.write_text(CONFIG.format(seed=seed))
    return p


def meta_of(path: Path) -> dict:
    if path.suffix == ".json":
        return json.loads(path.read_text())["meta"]
    meta = {}
    for line in path.read_text().splitlines():
        if not line.startswith("#"):
            break
        k, v = line[2:].split("=", 1)
        meta[k] = v
    return meta


def data_rows(path: Path) -> list[dict]:
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


@pytest.fixture(scope="module")
def all_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_config(tmp)
    assert main(["simulate", "-c", str(cfg), "-o", str(tmp / "a"), "--scenario", "all"]) == 0
    return tmp, cfg


def test_simulate_all_writes_every_scenario(all_run):
    tmp, _ = all_run
    out = tmp / "a"
    for slug in ("CS", "EV", "PV", "PV_BS", "EV_PV", "EV_PV_BS"):
        assert (out / f"scenario_{slug}.json").exists()
        assert (out / f"scenario_{slug}_energy.csv").exists()
    rows = data_rows(out / "comparison.csv")
    assert [r["scenario"] for r in rows] == ["CS", "EV", "PV", "PV+BS", "EV+PV", "EV+PV+BS"]


def test_every_output_carries_provenance(all_run):
    tmp, cfg = all_run
    out = tmp / "a"
    metas = [meta_of(p) for p in sorted(out.iterdir())]
    assert metas and all(set(m) == {"config_hash", "seed"} for m in metas)
    assert len({(str(m["config_hash"]), str(m["seed"])) for m in metas}) == 1
    assert str(metas[0]["seed"]) == "5"


def test_cs_scenario_has_empty_scr_table(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "o"), "--scenario", "CS"]) == 0
    path = tmp_path / "o" / "scenario_CS_scr_ssr.csv"
    assert data_rows(path) == []
    assert "building_id,scr,ssr" in path.read_text()
    assert not (tmp_path / "o" / "comparison.csv").exists()


def test_simulate_is_byte_identical(all_run, tmp_path):
    tmp, cfg = all_run
    assert main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "b"), "--scenario", "all"]) == 0
    a = {p.name: p.read_bytes() for p in (tmp / "a").iterdir()}
    b = {p.name: p.read_bytes() for p in (tmp_path / "b").iterdir()}
    assert a == b


def test_report_merges_scenarios(all_run, tmp_path):
    tmp, cfg = all_run
    out = tmp_path / "r"
    assert main(["simulate", "-c", str(cfg), "-o", str(out), "--scenario", "EV"]) == 0
    assert main(["simulate", "-c", str(cfg), "-o", str(out), "--scenario", "PV"]) == 0
    assert main(["report", "-c", str(cfg), "-o", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert [r["scenario"] for r in rep["scenarios"]] == ["EV", "PV"]
    assert set(rep["missing_scenarios"]) == {"CS", "PV+BS", "EV+PV", "EV+PV+BS"}
    assert rep["config"]["seed"] == 5
    full = {r["scenario"]: r for r in data_rows(tmp / "a" / "comparison.csv")}
    merged = {r["scenario"]: r for r in data_rows(out / "comparison.csv")}
    assert merged["EV"] == full["EV"]


def test_report_rejects_outputs_from_other_seed(all_run, tmp_path, capsys):
    tmp, _ = all_run
    other = write_config(tmp_path, seed=6)
    assert main(["report", "-c", str(other), "-o", str(tmp / "a")]) == 1
    assert "different config or seed" in capsys.readouterr().err


def test_report_without_outputs_fails(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["report", "-c", str(cfg), "-o", str(tmp_path / "empty")]) == 1


def test_tours_schema(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "t"
    assert main(["tours", "-c", str(cfg), "-o", str(out)]) == 0
    mv = json.loads((out / "mobility_validation.json").read_text())["mobility_validation"]
    assert len(mv["parked_at_home_share"]) == 7
    assert all(len(row) == 24 for row in mv["parked_at_home_share"])
    assert len(mv["departure_histogram"]) == 24 and len(mv["arrival_histogram"]) == 24
    assert len(mv["usage_days_distribution"]) == 8
    assert sum(mv["usage_days_distribution"]) == pytest.approx(1.0)
    tours = json.loads((out / "tours.json").read_text())
    assert len(tours["vehicles"]) == mv["vehicle_count"]


def test_synth_writes_population(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "s"
    assert main(["synth", "-c", str(cfg), "-o", str(out)]) == 0
    pop = json.loads((out / "population.json").read_text())
    assert len(data_rows(out / "households.csv")) > 0
    assert meta_of(out / "vehicles.csv") == {k: str(v) for k, v in pop["meta"].items()}


def test_gen_town_round_trip(tmp_path):
    cfg = write_config(tmp_path)
    town_dir = tmp_path / "town"
    assert main(["gen-town", "-c", str(cfg), "-o", str(town_dir)]) == 0
    for name in ("buildings.csv", "demand.csv", "pv_profiles.csv", "trip_diaries.json",
                 "training_examples.csv", "town.yaml"):
        assert (town_dir / name).exists()
    direct, from_files = tmp_path / "d", tmp_path / "f"
    assert main(["simulate", "-c", str(cfg), "-o", str(direct), "--scenario", "EV+PV"]) == 0
    assert main(["simulate", "-c", str(town_dir / "town.yaml"), "-o", str(from_files), "--scenario", "EV+PV"]) == 0
    a = json.loads((direct / "scenario_EV_PV.json").read_text())
    b = json.loads((from_files / "scenario_EV_PV.json").read_text())
    assert a["grid_import_gwh"] == pytest.approx(b["grid_import_gwh"], rel=1e-6)


def test_unknown_scenario_is_usage_error(tmp_path, capsys):
    cfg = write_config(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "-c", str(cfg), "--scenario", "XX"])
    assert exc.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_bad_config_exits_1_with_field_path(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("seed: 1\nev:\n  consumption: -1\nmobility:\n  use_default_mode_choice: true\n")
    assert main(["synth", "-c", str(p)]) == 1
    err = capsys.readouterr().err
    assert "ev.consumption" in err and "line 3" in err


def test_missing_config_file_exits_1(tmp_path):
    assert main(["synth", "-c", str(tmp_path / "nope.yaml")]) == 1
