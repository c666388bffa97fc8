"""Glue between a :class:`RunConfig` and the on-disk artifacts."""
from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import yaml

from . import io
from .config import RunConfig
from .der import PvParams
from .ev import EvResult
from .mobility import TripDiary
from .model import Building, Orientation
from .pipeline import Population, build_town
from .population.tree import LabeledBuildingExample
from .scenarios import (
    Scenario, ScenarioReport, SimulationSettings, Town, charging_by_building,
    mobility_validation, run_scenario, simulate_fleet,
)
from .synthtown import generate_synthetic_town
from .timeseries import TimeSeries

log = logging.getLogger(__name__)


@dataclass
class Inputs:
    buildings: list[Building]
    pv_profiles: dict[Orientation, TimeSeries]
    diaries: list[TripDiary]
    examples: Optional[list[LabeledBuildingExample]]
    census_flat_total: Optional[int] = None
    total_vehicles_target: Optional[int] = None


def load_inputs(cfg: RunConfig) -> Inputs:
    """Read the configured data files, or draw the synthetic town."""
    d = cfg.data
    syn = cfg.synthesis
    if d.synthetic:
        spec = replace(cfg.synthetic_town, year=cfg.year)
        bundle = generate_synthetic_town(spec, cfg.seed)
        examples = bundle.examples
        if d.training_examples is not None:
            examples = io.read_examples_csv(d.training_examples)
        return Inputs(
            bundle.buildings, bundle.pv_profiles, bundle.diaries, examples,
            syn.census_flat_total if syn.census_flat_total is not None else bundle.census_flat_total,
            syn.total_vehicles_target if syn.total_vehicles_target is not None else bundle.total_vehicles_target,
        )
    demand = io.read_demand_csv(d.demand, cfg.year)
    buildings = io.ingest_buildings(d.buildings, demand)
    examples = io.read_examples_csv(d.training_examples) if d.training_examples else None
    return Inputs(
        buildings, io.read_pv_profiles_csv(d.pv_profiles, cfg.year), io.read_trip_diaries(d.trip_diaries),
        examples, syn.census_flat_total, syn.total_vehicles_target,
    )


def prepare_town(cfg: RunConfig, inputs: Optional[Inputs] = None) -> tuple[Town, Population, Counter, Inputs]:
    inputs = inputs or load_inputs(cfg)
    syn = replace(cfg.synthesis, census_flat_total=inputs.census_flat_total,
                  total_vehicles_target=inputs.total_vehicles_target)
    town, pop, diag = build_town(
        inputs.buildings, inputs.diaries, syn, cfg.mode_choice, cfg.seed, cfg.year,
        inputs.examples, cfg.tree.max_depth, cfg.tree.min_leaf,
    )
    for v in town.vehicles:
        if v.id in cfg.capacity_overrides:
            v.battery_capacity = cfg.capacity_overrides[v.id]
    return town, pop, diag, inputs


def settings_for(cfg: RunConfig, inputs: Inputs) -> SimulationSettings:
    pv = PvParams(density=cfg.pv.density, cap=cfg.pv.cap, profile_library=inputs.pv_profiles)
    return SimulationSettings(ev=cfg.ev, pv=pv, bess=cfg.bess)


def meta(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.config_hash(), "seed": cfg.seed}


def scenario_slug(s: Scenario) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", Scenario(s).value)


# ---------------------------------------------------------------- gen-town

def write_bundle(cfg: RunConfig, out: Path) -> Path:
    """Write the synthetic town as data files plus a config that points at them."""
    out.mkdir(parents=True, exist_ok=True)
    spec = replace(cfg.synthetic_town, year=cfg.year)
    bundle = generate_synthetic_town(spec, cfg.seed)
    m = meta(cfg)
    io.write_buildings_csv(bundle.buildings, out / "buildings.csv", m)
    io.write_wide_series({b.id: b.demand for b in bundle.buildings}, out / "demand.csv", m)
    io.write_pv_profiles_csv(bundle.pv_profiles, out / "pv_profiles.csv", m)
    io.write_trip_diaries(bundle.diaries, out / "trip_diaries.json")
    io.write_examples_csv(bundle.examples, out / "training_examples.csv", m)
    doc = cfg.to_dict(include_output=False)
    doc.pop("synthetic_town")
    doc["data"] = {
        "buildings": "buildings.csv", "demand": "demand.csv", "pv_profiles": "pv_profiles.csv",
        "trip_diaries": "trip_diaries.json", "training_examples": "training_examples.csv",
    }
    doc["synthesis"]["census_flat_total"] = bundle.census_flat_total
    doc["synthesis"]["total_vehicles_target"] = bundle.total_vehicles_target
    doc["output_dir"] = "results"
    path = out / "town.yaml"
    header = "".join(f"# {k}={v}\n" for k, v in m.items())
    path.write_text(header + yaml.safe_dump(doc, sort_keys=False))
    return path


# ---------------------------------------------------------------- synth

def write_population(cfg: RunConfig, out: Path) -> Population:
    out.mkdir(parents=True, exist_ok=True)
    town, pop, _, _ = prepare_town(cfg)
    m = meta(cfg)
    io.write_json({
        "summary": pop.summary(),
        "buildings": [
            {"id": b.id, "type": pop.building_types[b.id].value, "flats": pop.flats[b.id]}
            for b in town.buildings
        ],
    }, out / "population.json", m)
    io.write_csv([
        {"id": h.id, "building_id": h.building_id, "family_type": h.family_type.value,
         "adults": h.adults, "children": h.children, "vehicles": len(h.vehicle_ids)}
        for h in pop.households
    ], out / "households.csv", m,
        fieldnames=["id", "building_id", "family_type", "adults", "children", "vehicles"])
    io.write_csv([
        {"id": v.id, "household_id": v.household_id, "building_id": v.home_building_id,
         "primary_driver": v.primary_driver_id, "secondary_drivers": " ".join(v.secondary_driver_ids)}
        for v in pop.vehicles
    ], out / "vehicles.csv", m,
        fieldnames=["id", "household_id", "building_id", "primary_driver", "secondary_drivers"])
    return pop


# ---------------------------------------------------------------- tours

def write_tours(cfg: RunConfig, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    town, _, diag, _ = prepare_town(cfg)
    m = meta(cfg)
    io.write_json({
        "vehicles": [
            {"id": v.id, "building_id": v.home_building_id,
             "tours": [[io.trip_to_json(t) for t in tour.trips] for tour in v.tours]}
            for v in town.vehicles
        ],
    }, out / "tours.json", m)
    mv = mobility_validation(town.vehicles)
    io.write_json({"mobility_validation": mv.to_dict(), "tour_diagnostics": dict(sorted(diag.items()))},
                  out / "mobility_validation.json", m)
    return mv


# ---------------------------------------------------------------- simulate

ENERGY_FIELDS = ("building_id", "pv_kwp", "bess_kwh", "demand_kwh", "cs_kwh", "pv_kwh",
                 "self_consumed_kwh", "grid_import_kwh", "feed_in_kwh")
COMPARISON_FIELDS = ("scenario", "buildings", "demand_kwh", "cs_kwh", "pv_kwh", "self_consumed_kwh",
                     "grid_import_kwh", "feed_in_kwh", "grid_import_gwh", "self_consumed_gwh",
                     "mean_scr", "mean_ssr", "max_monthly_peak_sum_kw", "max_monthly_peak_aggregate_kw")


def fleet_summary(results: dict[str, EvResult]) -> dict:
    vals = list(results.values())
    return {
        "vehicles": len(vals),
        "charged_kwh": math.fsum(r.charged_kwh for r in vals),
        "consumed_kwh": math.fsum(r.consumed_kwh for r in vals),
        "unserved_km": math.fsum(r.unserved_km for r in vals),
        "plug_in_events": sum(r.plug_in_events for r in vals),
        "forced_plug_ins": sum(r.forced_plug_ins for r in vals),
    }


def town_context(town: Town) -> dict:
    eligible = town.eligible_buildings()
    return {
        "buildings": len(town.buildings),
        "eligible_buildings": len(eligible),
        "excluded_existing_pv": sum(b.has_pv for b in town.buildings),
        "excluded_existing_ev": sum(b.has_ev and not b.has_pv for b in town.buildings),
        "households": len(town.households),
        "vehicles": len(town.vehicles),
    }


def comparison_row(d: dict) -> dict:
    """One comparison-table row from a serialized :class:`ScenarioReport`."""
    return {
        "scenario": d["scenario"], "buildings": d["building_count"], **d["totals_kwh"],
        "grid_import_gwh": d["grid_import_gwh"], "self_consumed_gwh": d["self_consumed_gwh"],
        "mean_scr": d["mean_scr"], "mean_ssr": d["mean_ssr"],
        "max_monthly_peak_sum_kw": max(d["monthly_peak_sum_kw"]),
        "max_monthly_peak_aggregate_kw": max(d["monthly_peak_aggregate_kw"]),
    }


def write_scenario(report: ScenarioReport, out: Path, m: dict, extra: dict) -> None:
    slug = scenario_slug(report.scenario)
    io.write_json({**report.to_dict(), **extra}, out / f"scenario_{slug}.json", m)
    io.write_csv([
        {"building_id": r.building_id, "scr": r.scr, "ssr": r.ssr}
        for r in report.buildings if r.scr is not None
    ], out / f"scenario_{slug}_scr_ssr.csv", m, fieldnames=["building_id", "scr", "ssr"])
    io.write_csv([
        {"month": k + 1, "peak_sum_kw": report.monthly_peak_sum_kw[k],
         "peak_aggregate_kw": report.monthly_peak_aggregate_kw[k]}
        for k in range(12)
    ], out / f"scenario_{slug}_monthly_peaks.csv", m)
    io.write_csv([{k: getattr(r, k) for k in ENERGY_FIELDS} for r in report.buildings],
                 out / f"scenario_{slug}_energy.csv", m, fieldnames=ENERGY_FIELDS)


def simulate(cfg: RunConfig, scenarios: Sequence[Scenario], out: Path) -> dict[Scenario, ScenarioReport]:
    """Run ``scenarios`` and write one report per scenario, plus a comparison for several."""
    out.mkdir(parents=True, exist_ok=True)
    town, _, _, inputs = prepare_town(cfg)
    settings = settings_for(cfg, inputs)
    m = meta(cfg)
    fleet = cs = None
    if any(Scenario(s).add_ev for s in scenarios):
        fleet = simulate_fleet(town.vehicles, settings.ev, town.year, cfg.seed)
        cs = charging_by_building(town, fleet)
    context = town_context(town)
    reports = {}
    for s in scenarios:
        s = Scenario(s)
        rep = run_scenario(town, s, settings, cfg.seed, cs)
        extra = {"town": context}
        if s.add_ev:
            extra["fleet"] = fleet_summary(fleet)
        write_scenario(rep, out, m, extra)
        reports[s] = rep
        log.info("%s: grid import %.3f GWh", s.value, rep.grid_import_gwh)
    if len(reports) > 1:
        io.write_csv([comparison_row(r.to_dict()) for r in reports.values()], out / "comparison.csv", m,
                     fieldnames=COMPARISON_FIELDS)
    return reports


# ---------------------------------------------------------------- report

def merge_reports(cfg: RunConfig, out: Path) -> dict:
    """Collect the scenario outputs in ``out`` into one report."""
    found = {}
    for s in cfg.scenarios:
        path = out / f"scenario_{scenario_slug(s)}.json"
        if path.exists():
            found[Scenario(s)] = json.loads(path.read_text())
    if not found:
        raise FileNotFoundError(f"no scenario outputs in {out}; run 'simulate' first")
    m = meta(cfg)
    stale = [s.value for s, d in found.items() if d.get("meta") != m]
    if stale:
        raise ValueError(f"scenario outputs {stale} were produced by a different config or seed")
    rows = [comparison_row(d) for d in found.values()]
    first = next(iter(found.values()))
    report = {
        "config": cfg.to_dict(include_output=False),
        "town": first.get("town"),
        "scenarios": rows,
        "monthly_peaks": {
            s.value: {"sum_kw": d["monthly_peak_sum_kw"], "aggregate_kw": d["monthly_peak_aggregate_kw"]}
            for s, d in found.items()
        },
        "missing_scenarios": [Scenario(s).value for s in cfg.scenarios if Scenario(s) not in found],
    }
    io.write_json(report, out / "report.json", m)
    io.write_csv(rows, out / "comparison.csv", m, fieldnames=COMPARISON_FIELDS)
    return report
