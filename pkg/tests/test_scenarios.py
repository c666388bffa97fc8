import math

import numpy as np
import pytest

from evtwin.der import simulate_building
from evtwin.scenarios import (
    ALL_SCENARIOS, Scenario, charging_by_building, mobility_validation, run_scenario, run_scenarios,
    scr, simulate_fleet, ssr,
)
from helpers import minute, round_trip, series, vehicle


def test_scr_ssr_fixture():
    r = simulate_building(series([1, 2, 1]), pv=series([0, 4, 0]))
    assert r.self_consumption.values.tolist() == [0, 2, 0]
    assert scr(r) == 0.5 and ssr(r) == 0.5


def test_scr_ssr_edge_cases():
    r = simulate_building(series([1, 2, 1]))
    assert scr(r) is None and ssr(r) == 0.0
    r = simulate_building(series([1, 2, 1]), pv=series([5, 5, 5]))
    assert ssr(r) == 1.0 and scr(r) == pytest.approx(4 / 15)
    with pytest.raises(ValueError):
        ssr(simulate_building(series([0, 0])))


def test_scenario_flags():
    assert [s.value for s in ALL_SCENARIOS] == ["CS", "EV", "PV", "PV+BS", "EV+PV", "EV+PV+BS"]
    assert Scenario.EV_PV_BS.add_ev and Scenario.EV_PV_BS.add_pv and Scenario.EV_PV_BS.add_bess
    assert not Scenario.PV.add_ev and not Scenario.CS.add_pv


@pytest.fixture(scope="module")
def reports(small_town):
    _, town, _, settings = small_town
    return run_scenarios(town, ALL_SCENARIOS, settings, 3)


def test_cs_baseline(small_town, reports):
    _, town, _, _ = small_town
    cs = reports[Scenario.CS]
    for rec, b in zip(cs.buildings, town.eligible_buildings()):
        assert rec.building_id == b.id
        assert rec.grid_import_kwh == pytest.approx(b.demand.total())
        assert rec.scr is None and rec.ssr == 0
    assert cs.scr_values() == []


def test_eligibility(small_town, reports):
    _, town, _, _ = small_town
    ids = {r.building_id for r in reports[Scenario.PV].buildings}
    assert ids == {b.id for b in town.buildings if not b.has_pv and not b.has_ev}


def _imports(report):
    return np.array([r.grid_import_kwh for r in report.buildings])


def test_monotonicity(reports):
    g = {s: _imports(r) for s, r in reports.items()}
    tol = 1e-9
    assert np.all(g[Scenario.EV_PV_BS] <= g[Scenario.EV_PV] + tol)
    assert np.all(g[Scenario.EV_PV] <= g[Scenario.EV] + tol)
    assert np.all(g[Scenario.PV_BS] <= g[Scenario.PV] + tol)
    assert np.all(g[Scenario.PV] <= g[Scenario.CS] + tol)
    assert np.all(g[Scenario.EV] >= g[Scenario.CS] - tol)


def test_adding_evs_never_lowers_scr(reports):
    pv = {r.building_id: r for r in reports[Scenario.PV].buildings}
    for r in reports[Scenario.EV_PV].buildings:
        base = pv[r.building_id]
        assert r.pv_kwh == base.pv_kwh
        assert r.self_consumed_kwh >= base.self_consumed_kwh - 1e-9
        if r.scr is not None:
            assert r.scr >= base.scr - 1e-12


def test_identity_and_totals(reports):
    for rep in reports.values():
        for r in rep.buildings:
            if r.scr is not None:
                assert r.scr * r.pv_kwh == pytest.approx(r.self_consumed_kwh, rel=1e-6)
            assert r.ssr * (r.demand_kwh + r.cs_kwh) == pytest.approx(r.self_consumed_kwh, rel=1e-6, abs=1e-9)
        d = rep.to_dict()
        assert d["totals_kwh"]["grid_import_kwh"] == math.fsum(r.grid_import_kwh for r in rep.buildings)
        assert rep.monthly_peak_sum_kw == pytest.approx(
            [math.fsum(r.monthly_peak_kw[m] for r in rep.buildings) for m in range(12)])
        # the coincident peak can never exceed the sum of individual peaks
        assert np.all(np.array(rep.monthly_peak_aggregate_kw) <= np.array(rep.monthly_peak_sum_kw) + 1e-9)


def test_run_scenario_matches_shared_fleet(small_town, reports):
    _, town, _, settings = small_town
    alone = run_scenario(town, Scenario.EV_PV, settings, 3)
    assert alone.to_dict() == reports[Scenario.EV_PV].to_dict()


def test_charging_aggregates_per_building(small_town):
    _, town, _, settings = small_town
    fleet = simulate_fleet(town.vehicles, settings.ev, town.year, 3)
    cs = charging_by_building(town, fleet)
    total = math.fsum(s.total() for s in cs.values())
    assert total == pytest.approx(math.fsum(r.charged_kwh for r in fleet.values()))
    for v in town.vehicles:
        assert v.home_building_id in cs


def test_different_seed_changes_results(small_town):
    _, town, _, settings = small_town
    a = run_scenario(town, Scenario.EV, settings, 3)
    b = run_scenario(town, Scenario.EV, settings, 4)
    assert _imports(a).tolist() != _imports(b).tolist()


def test_mobility_validation_no_tours():
    mv = mobility_validation([vehicle(tours=[])])
    assert np.all(np.array(mv.parked_at_home_share) == 1.0)
    assert sum(mv.departure_histogram) == 0 and sum(mv.arrival_histogram) == 0
    assert mv.mean_usage_days == 0 and mv.usage_days_distribution[0] == 1.0


def test_mobility_validation_tuesday_tour():
    from evtwin.model import Tour, Trip
    t = Tour("p", (Trip(minute(1, "08:00"), minute(1, "12:00"), 10, True, False),
                   Trip(minute(1, "12:00"), minute(1, "17:00"), 10, False, True)))
    mv = mobility_validation([vehicle(tours=[t])])
    share = np.array(mv.parked_at_home_share)
    assert np.all(share[1, 8:17] == 0.0)
    assert share[1, 7] == 1.0 and share[1, 17] == 1.0
    assert np.all(np.delete(share, 1, axis=0) == 1.0)
    assert mv.departure_histogram[8] == 1.0 and mv.arrival_histogram[17] == 1.0


def test_mean_usage_days_of_known_fleet():
    # a fleet whose vehicles drive on k days each, k cycling through 1..7
    fleet = [vehicle(f"v{k}", tours=[round_trip("p", d, "07:00", "16:00", 10) for d in range(k)])
             for k in list(range(1, 8)) * 5]
    mv = mobility_validation(fleet)
    assert mv.mean_usage_days == pytest.approx(4.0)
    assert mv.usage_days_distribution[5] == pytest.approx(1 / 7)
    assert int(np.argmax(mv.departure_histogram)) == 7
