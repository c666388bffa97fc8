"""From buildings and trip diaries to a simulation-ready :class:`Town`."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .mobility import ModeChoiceTable, TripDiary, build_tours, sample_household_tours
from .model import Building, BuildingType, Household, Tour, Vehicle
from .population import (
    BuildingTypeClassifier, LabeledBuildingExample, SynthesisConfig, assign_vehicles,
    calibrate_flats, estimate_flats, rule_based_type, sample_households,
)
from .population.tree import building_features
from .scenarios import Town
from .validation import substream

log = logging.getLogger(__name__)


@dataclass
class Population:
    building_types: dict[str, BuildingType]
    flats: dict[str, int]
    households: list[Household]
    vehicles: list[Vehicle]
    training_accuracy: Optional[float] = None

    def summary(self) -> dict:
        adults = sum(h.adults for h in self.households)
        return {
            "buildings": len(self.flats),
            "flats": sum(self.flats.values()),
            "households": len(self.households),
            "persons": sum(h.size for h in self.households),
            "adults": adults,
            "vehicles": len(self.vehicles),
            "building_types": dict(Counter(t.value for t in self.building_types.values())),
            "training_accuracy": self.training_accuracy,
        }


def synthesize_population(
    buildings: Sequence[Building],
    cfg: SynthesisConfig,
    seed: int,
    examples: Optional[Sequence[LabeledBuildingExample]] = None,
    max_depth: int = 5,
    min_leaf: int = 1,
) -> Population:
    """Building types, flats, households and vehicles for a set of buildings.

    Without labeled examples the building type follows the meter count.
    """
    accuracy = None
    if examples:
        clf = BuildingTypeClassifier(max_depth=max_depth, min_leaf=min_leaf)
        X = [building_features(e) for e in examples]
        y = [e.label.value for e in examples]
        clf.fit(X, y)
        accuracy = float(clf.score(X, y))
        pred = clf.predict([building_features(b) for b in buildings]) if buildings else []
        types = {b.id: BuildingType(p) for b, p in zip(buildings, pred)}
    else:
        types = {b.id: rule_based_type(b.meter_count) for b in buildings}

    flats = [estimate_flats(b, types[b.id], cfg.residential_meter_fraction) for b in buildings]
    if cfg.census_flat_total is not None:
        flats = calibrate_flats(flats, [types[b.id] for b in buildings], cfg.census_flat_total)
    flat_map = {b.id: int(n) for b, n in zip(buildings, flats)}

    households = sample_households(list(flat_map.items()), cfg, substream(seed, "households"))
    vehicles = assign_vehicles(households, cfg, substream(seed, "vehicles"))
    return Population(types, flat_map, households, vehicles, accuracy)


def tours_per_diary(diaries: Sequence[TripDiary], diagnostics: Optional[Counter] = None) -> list[list[Tour]]:
    return [build_tours(d, diagnostics) for d in diaries]


def assign_vehicle_tours(
    households: Sequence[Household],
    vehicles: Sequence[Vehicle],
    diary_tours: Sequence[Sequence[Tour]],
    table: ModeChoiceTable,
    seed: int,
) -> dict[str, list[Tour]]:
    """Give every adult a diary from the pool and sample the tours of each vehicle.

    Diaries are drawn with replacement on per-person substreams; vehicle
    tours are written to ``vehicle.tours``. Returns the tours per person.
    """
    if not diary_tours:
        raise ValueError("the trip-diary pool is empty")
    by_household: dict[str, list[Vehicle]] = {}
    for v in vehicles:
        by_household.setdefault(v.household_id, []).append(v)
    person_tours: dict[str, list[Tour]] = {}
    for hh in households:
        own = {}
        for pid in hh.adult_ids:
            k = int(substream(seed, "diary", pid).integers(len(diary_tours)))
            own[pid] = [Tour(pid, t.trips) for t in diary_tours[k]]
        person_tours.update(own)
        hv = by_household.get(hh.id)
        if hv:
            sampled = sample_household_tours(hv, own, table, substream(seed, "mode", hh.id))
            for v in hv:
                v.tours = sampled[v.id]
    return person_tours


def build_town(
    buildings: Sequence[Building],
    diaries: Sequence[TripDiary],
    cfg: SynthesisConfig,
    table: ModeChoiceTable,
    seed: int,
    year: int,
    examples: Optional[Sequence[LabeledBuildingExample]] = None,
    max_depth: int = 5,
    min_leaf: int = 1,
) -> tuple[Town, Population, Counter]:
    diagnostics: Counter = Counter()
    pop = synthesize_population(buildings, cfg, seed, examples, max_depth, min_leaf)
    pool = tours_per_diary(diaries, diagnostics)
    assign_vehicle_tours(pop.households, pop.vehicles, pool, table, seed)
    town = Town(year=year, buildings=list(buildings), households=pop.households, vehicles=pop.vehicles)
    log.info("town: %d buildings, %d households, %d vehicles",
             len(town.buildings), len(pop.households), len(pop.vehicles))
    return town, pop, diagnostics
