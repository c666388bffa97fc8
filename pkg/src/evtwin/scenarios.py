"""The six town scenarios, per-building SCR/SSR and the mobility checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .der import BessParams, BuildingEnergyResult, PvParams, pv_series, simulate_building, size_bess, size_pv
from .ev import EvParams, EvResult, simulate_ev
from .mobility import weekly_usage_days
from .model import MINUTES_PER_DAY, MINUTES_PER_WEEK, Building, Vehicle
from .timeseries import TimeSeries, exact_sum, ts_monthly_max
from .validation import substream


class Scenario(str, Enum):
    CS = "CS"
    EV = "EV"
    PV = "PV"
    PV_BS = "PV+BS"
    EV_PV = "EV+PV"
    EV_PV_BS = "EV+PV+BS"

    @property
    def add_ev(self) -> bool:
        return "EV" in self.value

    @property
    def add_pv(self) -> bool:
        return "PV" in self.value

    @property
    def add_bess(self) -> bool:
        return "BS" in self.value


ALL_SCENARIOS = tuple(Scenario)


@dataclass
class BessSettings:
    max_capacity: float = 20.0
    c_rate: float = 0.5
    round_trip_efficiency: float = 0.90


@dataclass
class SimulationSettings:
    """Technology parameters shared by every scenario run."""

    ev: EvParams = field(default_factory=EvParams)
    pv: PvParams = field(default_factory=PvParams)
    bess: BessSettings = field(default_factory=BessSettings)


@dataclass
class Town:
    """Synthesized town ready for simulation."""

    year: int
    buildings: list[Building]
    households: list = field(default_factory=list)
    vehicles: list[Vehicle] = field(default_factory=list)

    def vehicles_by_building(self) -> dict[str, list[Vehicle]]:
        out: dict[str, list[Vehicle]] = {b.id: [] for b in self.buildings}
        for v in self.vehicles:
            out.setdefault(v.home_building_id, []).append(v)
        return out

    def eligible_buildings(self) -> list[Building]:
        """Residential buildings with neither PV nor an existing EV."""
        return [b for b in self.buildings if not b.has_pv and not b.has_ev]


def scr(result: BuildingEnergyResult) -> Optional[float]:
    """Self-consumption ratio, or None when the building generates nothing."""
    pv_total = exact_sum(result.pv.values)
    if pv_total == 0:
        return None
    return exact_sum(result.self_consumption.values) / pv_total


def ssr(result: BuildingEnergyResult) -> float:
    """Self-sufficiency ratio."""
    demand_total = exact_sum(result.demand.values) + exact_sum(result.cs_demand.values)
    if demand_total <= 0:
        raise ValueError("self-sufficiency is undefined for zero total demand")
    return exact_sum(result.self_consumption.values) / demand_total


@dataclass
class BuildingRecord:
    building_id: str
    pv_kwp: float
    bess_kwh: float
    demand_kwh: float
    cs_kwh: float
    pv_kwh: float
    self_consumed_kwh: float
    grid_import_kwh: float
    feed_in_kwh: float
    scr: Optional[float]
    ssr: Optional[float]
    monthly_peak_kw: list[float]


@dataclass
class ScenarioReport:
    scenario: Scenario
    seed: int
    buildings: list[BuildingRecord]
    monthly_peak_sum_kw: list[float]
    monthly_peak_aggregate_kw: list[float]

    @property
    def building_count(self) -> int:
        return len(self.buildings)

    def total(self, name: str) -> float:
        """Order-independent exact sum of a per-building kWh column."""
        return math.fsum(getattr(r, name) for r in self.buildings)

    @property
    def grid_import_gwh(self) -> float:
        return self.total("grid_import_kwh") / 1e6

    @property
    def self_consumed_gwh(self) -> float:
        return self.total("self_consumed_kwh") / 1e6

    def scr_values(self) -> list[float]:
        return [r.scr for r in self.buildings if r.scr is not None]

    def ssr_values(self) -> list[float]:
        return [r.ssr for r in self.buildings if r.ssr is not None]

    def to_dict(self) -> dict:
        keys = ("demand_kwh", "cs_kwh", "pv_kwh", "self_consumed_kwh", "grid_import_kwh", "feed_in_kwh")
        scrs, ssrs = self.scr_values(), self.ssr_values()
        return {
            "scenario": self.scenario.value,
            "seed": self.seed,
            "building_count": self.building_count,
            "totals_kwh": {k: self.total(k) for k in keys},
            "grid_import_gwh": self.grid_import_gwh,
            "self_consumed_gwh": self.self_consumed_gwh,
            "mean_scr": float(np.mean(scrs)) if scrs else None,
            "mean_ssr": float(np.mean(ssrs)) if ssrs else None,
            "monthly_peak_sum_kw": list(self.monthly_peak_sum_kw),
            "monthly_peak_aggregate_kw": list(self.monthly_peak_aggregate_kw),
            "buildings": [vars(r) for r in self.buildings],
        }


def simulate_fleet(
    vehicles: Sequence[Vehicle], params: EvParams, year: int, seed: int
) -> dict[str, EvResult]:
    """Charging results per vehicle, each on its own random substream."""
    return {v.id: simulate_ev(v, params, year, substream(seed, "ev", v.id)) for v in vehicles}


def charging_by_building(
    town: Town, ev_results: Mapping[str, EvResult]
) -> dict[str, TimeSeries]:
    """Aggregate charging-station demand of every building."""
    out = {}
    for bid, vehicles in town.vehicles_by_building().items():
        total = None
        for v in vehicles:
            vals = ev_results[v.id].charging_series.values
            total = vals.copy() if total is None else total + vals
        if total is not None:
            out[bid] = ev_results[vehicles[0].id].charging_series.with_values(total)
    return out


def run_scenario(
    town: Town,
    scenario: Scenario,
    settings: SimulationSettings,
    seed: int,
    cs_series: Optional[Mapping[str, TimeSeries]] = None,
) -> ScenarioReport:
    """Simulate every eligible building of ``town`` under ``scenario``.

    ``cs_series`` holds precomputed charging demand per building; it is
    computed from the town's vehicles when omitted and the scenario adds EVs.
    """
    scenario = Scenario(scenario)
    if scenario.add_ev and cs_series is None:
        cs_series = charging_by_building(town, simulate_fleet(town.vehicles, settings.ev, town.year, seed))
    records = []
    aggregate = None
    for b in town.eligible_buildings():
        if b.demand is None:
            raise ValueError(f"building {b.id} has no demand series")
        cs = cs_series.get(b.id) if scenario.add_ev and cs_series else None
        kwp, pv = 0.0, None
        if scenario.add_pv:
            kwp = size_pv(b.roof_area, settings.pv)
            pv = pv_series(kwp, b.roof_orientation, settings.pv.profile_library)
        bess = None
        if scenario.add_bess:
            cap = size_bess(b.demand.total() / 1000.0, settings.bess.max_capacity)
            bess = BessParams.sized(cap, settings.bess.c_rate, settings.bess.round_trip_efficiency)
        res = simulate_building(b.demand, cs, pv, bess)
        demand_total = float(res.demand.values.sum() + res.cs_demand.values.sum())
        records.append(BuildingRecord(
            building_id=b.id,
            pv_kwp=kwp,
            bess_kwh=bess.capacity if bess is not None else 0.0,
            demand_kwh=float(res.demand.values.sum()),
            cs_kwh=float(res.cs_demand.values.sum()),
            pv_kwh=float(res.pv.values.sum()),
            self_consumed_kwh=float(res.self_consumption.values.sum()),
            grid_import_kwh=float(res.grid_import.values.sum()),
            feed_in_kwh=float(res.feed_in.values.sum()),
            scr=scr(res),
            ssr=ssr(res) if demand_total > 0 else None,
            monthly_peak_kw=ts_monthly_max(res.grid_import).tolist(),
        ))
        g = res.grid_import.values
        aggregate = g.copy() if aggregate is None else aggregate + g
    if records:
        peak_sum = [math.fsum(r.monthly_peak_kw[m] for r in records) for m in range(12)]
        first = town.eligible_buildings()[0].demand
        peak_agg = ts_monthly_max(first.with_values(aggregate)).tolist()
    else:
        peak_sum = [0.0] * 12
        peak_agg = [0.0] * 12
    return ScenarioReport(scenario, seed, records, peak_sum, peak_agg)


def run_scenarios(
    town: Town, scenarios: Sequence[Scenario], settings: SimulationSettings, seed: int
) -> dict[Scenario, ScenarioReport]:
    """Run several scenarios sharing one simulation of the EV fleet."""
    scenarios = [Scenario(s) for s in scenarios]
    cs_series = None
    if any(s.add_ev for s in scenarios):
        cs_series = charging_by_building(town, simulate_fleet(town.vehicles, settings.ev, town.year, seed))
    return {s: run_scenario(town, s, settings, seed, cs_series) for s in scenarios}


@dataclass
class MobilityValidation:
    parked_at_home_share: list[list[float]]
    departure_histogram: list[float]
    arrival_histogram: list[float]
    usage_days_distribution: list[float]
    mean_usage_days: float
    vehicle_count: int

    def to_dict(self) -> dict:
        return dict(vars(self))


def _normalized(counts: np.ndarray) -> list[float]:
    total = counts.sum()
    return (counts / total).tolist() if total else [0.0] * len(counts)


def mobility_validation(vehicles: Sequence[Vehicle]) -> MobilityValidation:
    """Weekly usage statistics of vehicle tours.

    The parked share is the time-weighted fraction of each hour of the week
    during which no tour is in progress.
    """
    n = len(vehicles)
    driving = np.zeros(MINUTES_PER_WEEK)
    dep = np.zeros(24)
    arr = np.zeros(24)
    usage = np.zeros(8)
    for v in vehicles:
        for t in v.tours:
            driving[t.departure:min(t.arrival, MINUTES_PER_WEEK)] += 1
            dep[(t.departure % MINUTES_PER_DAY) // 60] += 1
            arr[(t.arrival % MINUTES_PER_DAY) // 60] += 1
        usage[weekly_usage_days(v.tours)] += 1
    if n:
        parked = 1.0 - driving.reshape(7, 24, 60).mean(axis=2) / n
    else:
        parked = np.ones((7, 24))
    dist = _normalized(usage)
    mean_days = float(np.dot(np.arange(8), usage) / n) if n else 0.0
    return MobilityValidation(
        parked_at_home_share=parked.tolist(),
        departure_histogram=_normalized(dep),
        arrival_histogram=_normalized(arr),
        usage_days_distribution=dist,
        mean_usage_days=mean_days,
        vehicle_count=n,
    )
