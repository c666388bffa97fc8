import hashlib
import json

import numpy as np
import pytest

from evtwin import io
from evtwin.model import MINUTES_PER_DAY, Orientation
from evtwin.synthtown import SyntheticTownSpec, generate_synthetic_town

HEADER = "id,roof_area_m2,orientation,volume_m3,meter_count,has_pv,has_hp\n"


def _demand_csv(path, ids, value=1.0, n=8760):
    with open(path, "w") as fh:
        fh.write(",".join(ids) + "\n")
        for _ in range(n):
            fh.write(",".join([str(value)] * len(ids)) + "\n")


def test_single_building(tmp_path):
    (tmp_path / "b.csv").write_text(HEADER + "B1,120.5,S,600,1,0,1\n")
    _demand_csv(tmp_path / "d.csv", ["B1"])
    (b,) = io.ingest_buildings(tmp_path / "b.csv", io.read_demand_csv(tmp_path / "d.csv", 2021))
    assert b.id == "B1" and b.roof_area == 120.5 and b.roof_orientation == Orientation.S
    assert b.has_heat_pump and not b.has_pv and not b.has_ev
    assert b.demand.total() == 8760.0


def test_negative_roof_area(tmp_path):
    (tmp_path / "b.csv").write_text(HEADER + "B1,-3,S,600,1,0,0\n")
    with pytest.raises(io.DataError, match=":2"):
        io.ingest_buildings(tmp_path / "b.csv")


def test_bad_values_have_row_diagnostics(tmp_path):
    (tmp_path / "b.csv").write_text(HEADER + "B1,10,S,600,1,0,0\nB2,10,Q,600,1,0,0\n")
    with pytest.raises(io.DataError, match=":3"):
        io.ingest_buildings(tmp_path / "b.csv")
    (tmp_path / "b.csv").write_text(HEADER + "B1,10,S,600,x,0,0\n")
    with pytest.raises(io.DataError, match="meter_count"):
        io.ingest_buildings(tmp_path / "b.csv")
    (tmp_path / "b.csv").write_text("id,roof_area_m2\nB1,10\n")
    with pytest.raises(io.DataError, match="missing columns"):
        io.ingest_buildings(tmp_path / "b.csv")


def test_join_error_lists_ids(tmp_path):
    (tmp_path / "b.csv").write_text(HEADER + "B1,1,S,1,1,0,0\nB2,1,S,1,1,0,0\nB3,1,S,1,1,0,0\n")
    _demand_csv(tmp_path / "d.csv", ["B2"])
    with pytest.raises(io.JoinError) as e:
        io.ingest_buildings(tmp_path / "b.csv", io.read_demand_csv(tmp_path / "d.csv", 2021))
    assert e.value.missing == ["B1", "B3"]


def test_demand_rejects_nan_and_negative(tmp_path):
    p = tmp_path / "d.csv"
    _demand_csv(p, ["A", "B"])
    lines = p.read_text().splitlines()
    lines[10] = "1.0,-2.0"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.DataError, match="'B'.*rows 11"):
        io.read_demand_csv(p, 2021)
    lines[10] = "nan,1.0"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(io.DataError, match="'A'.*rows 11"):
        io.read_demand_csv(p, 2021)


def test_demand_row_count_and_timestamp_column(tmp_path):
    p = tmp_path / "d.csv"
    _demand_csv(p, ["A"], n=100)
    with pytest.raises(io.DataError, match="8760"):
        io.read_demand_csv(p, 2021)
    with open(p, "w") as fh:
        fh.write("timestamp,A\n")
        for h in range(8760):
            fh.write(f"t{h},2\n")
    assert list(io.read_demand_csv(p, 2021)) == ["A"]


def test_diary_round_trip(tmp_path):
    bundle = generate_synthetic_town(SyntheticTownSpec(n_buildings=1, diary_pool_size=30), 4)
    io.write_trip_diaries(bundle.diaries, tmp_path / "t.json")
    back = io.read_trip_diaries(tmp_path / "t.json")
    assert [(d.person_id, d.trips) for d in back] == [(d.person_id, d.trips) for d in bundle.diaries]


def test_diary_overnight_arrival(tmp_path):
    data = [{"id": "p", "trips": [
        {"day": 4, "dep": "22:30", "arr": "00:15", "km": 80, "from_home": True, "to_home": False}]}]
    (tmp_path / "t.json").write_text(json.dumps(data))
    (d,) = io.read_trip_diaries(tmp_path / "t.json")
    t = d.trips[0]
    assert t.departure == 4 * MINUTES_PER_DAY + 22 * 60 + 30
    assert t.arrival == 5 * MINUTES_PER_DAY + 15


@pytest.mark.parametrize("trip,msg", [
    ({"day": 9, "dep": "08:00", "arr": "09:00", "km": 1, "from_home": True, "to_home": True}, "day"),
    ({"day": 1, "dep": "8h", "arr": "09:00", "km": 1, "from_home": True, "to_home": True}, "HH:MM"),
    ({"day": 1, "dep": "08:00", "km": 1, "from_home": True, "to_home": True}, "arr"),
])
def test_diary_errors(tmp_path, trip, msg):
    (tmp_path / "t.json").write_text(json.dumps([{"id": "p", "trips": [trip]}]))
    with pytest.raises(io.DataError, match=msg):
        io.read_trip_diaries(tmp_path / "t.json")


def test_pv_profiles_round_trip(tmp_path):
    bundle = generate_synthetic_town(SyntheticTownSpec(n_buildings=1, diary_pool_size=1), 0)
    io.write_pv_profiles_csv(bundle.pv_profiles, tmp_path / "p.csv", {"seed": 0})
    back = io.read_pv_profiles_csv(tmp_path / "p.csv", 2021)
    assert set(back) == set(Orientation)
    for k, s in back.items():
        assert np.allclose(s.values, bundle.pv_profiles[k].values, atol=1e-6)


def test_examples_round_trip(tmp_path):
    bundle = generate_synthetic_town(SyntheticTownSpec(n_buildings=30, diary_pool_size=1), 2)
    io.write_examples_csv(bundle.examples, tmp_path / "e.csv", {"seed": 2})
    assert io.read_examples_csv(tmp_path / "e.csv") == bundle.examples


# frozen from the first run of this fixture: 1 000 buildings drawn with seed 2021
FIXTURE_BUILDINGS_SHA256 = "8bb277ab644b33756edd17ec5f223696e7abc490f65fc4482ccff7e868cb5c43"
FIXTURE_DEMAND_KWH = 7855840.737


def test_thousand_building_fixture_is_stable(tmp_path):
    spec = SyntheticTownSpec(n_buildings=1000, diary_pool_size=1)
    bundle = generate_synthetic_town(spec, 2021)
    io.write_buildings_csv(bundle.buildings, tmp_path / "b.csv")
    io.write_wide_series({b.id: b.demand for b in bundle.buildings}, tmp_path / "d.csv")
    back = io.ingest_buildings(tmp_path / "b.csv", io.read_demand_csv(tmp_path / "d.csv", 2021))
    assert len(back) == 1000
    digest = hashlib.sha256((tmp_path / "b.csv").read_bytes()).hexdigest()
    total = round(sum(b.demand.total() for b in back), 3)
    assert digest == FIXTURE_BUILDINGS_SHA256
    assert total == FIXTURE_DEMAND_KWH
    assert [b.id for b in back] == [b.id for b in bundle.buildings]
