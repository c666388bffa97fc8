"""Deterministic synthetic town: buildings, demand, PV profiles and trip diaries.

Stands in for measured utility data so the whole pipeline runs end to end.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Mapping, Optional

import numpy as np

from .model import (
    MINUTES_PER_DAY, MINUTES_PER_WEEK, Building, BuildingType, Orientation, Trip,
)
from .mobility import TripDiary
from .population.tree import LabeledBuildingExample
from .timeseries import TimeSeries, year_hours
from .validation import check_distribution, substream

LATITUDE = 50.03
LONGITUDE = 10.51
SOUTH_YIELD_KWH_PER_KWP = 950.0

# hourly weekday/weekend shapes of a residential meter, arbitrary scale
ARCHETYPES = {
    "family": (
        [0.35, 0.3, 0.28, 0.27, 0.28, 0.35, 0.6, 0.85, 0.7, 0.55, 0.5, 0.55,
         0.65, 0.55, 0.5, 0.55, 0.7, 0.95, 1.1, 1.15, 1.05, 0.9, 0.7, 0.5],
        [0.4, 0.33, 0.3, 0.28, 0.28, 0.3, 0.4, 0.55, 0.75, 0.85, 0.9, 0.95,
         1.0, 0.85, 0.75, 0.7, 0.75, 0.9, 1.05, 1.1, 1.0, 0.9, 0.75, 0.55],
    ),
    "single": (
        [0.3, 0.27, 0.25, 0.25, 0.25, 0.3, 0.5, 0.7, 0.45, 0.35, 0.33, 0.35,
         0.4, 0.35, 0.33, 0.35, 0.45, 0.7, 0.9, 0.95, 0.9, 0.75, 0.55, 0.4],
        [0.35, 0.3, 0.27, 0.25, 0.25, 0.27, 0.3, 0.4, 0.6, 0.7, 0.7, 0.75,
         0.8, 0.7, 0.6, 0.55, 0.6, 0.75, 0.9, 0.95, 0.9, 0.8, 0.6, 0.45],
    ),
}


@dataclass
class SyntheticTownSpec:
    """Distributions from which a synthetic town is drawn.

    ``roof_area_m2`` and ``annual_kwh_per_flat`` are ``(median, sigma)`` of
    lognormal distributions. ``commuting_mix`` maps pattern names
    (``fulltime``, ``parttime``, ``retired``, ``occasional``) to shares.
    """

    n_buildings: int = 200
    year: int = 2021
    building_type_mix: Mapping[str, float] = field(default_factory=lambda: {
        "single-family": 0.6, "two-family": 0.25, "apartment-tower": 0.15})
    tower_flats: tuple[int, int] = (3, 16)
    roof_area_m2: tuple[float, float] = (110.0, 0.35)
    orientation_mix: Mapping[str, float] = field(default_factory=lambda: {
        "S": 0.35, "E/W": 0.35, "N": 0.1, "flat": 0.2})
    annual_kwh_per_flat: tuple[float, float] = (3000.0, 0.3)
    archetype_mix: Mapping[str, float] = field(default_factory=lambda: {"family": 0.6, "single": 0.4})
    existing_pv_share: float = 0.1
    heat_pump_share: float = 0.08
    existing_ev_share: float = 0.03
    commuting_mix: Mapping[str, float] = field(default_factory=lambda: {
        "fulltime": 0.55, "parttime": 0.2, "retired": 0.15, "occasional": 0.1})
    diary_pool_size: int = 2000
    survey_share: float = 0.17
    vehicles_per_flat: float = 1.25

    def __post_init__(self):
        if self.n_buildings < 1 or self.diary_pool_size < 1:
            raise ValueError("building count and diary pool size must be >= 1")
        for name in ("building_type_mix", "orientation_mix", "archetype_mix", "commuting_mix"):
            check_distribution(getattr(self, name), name)
        unknown = set(self.archetype_mix) - set(ARCHETYPES)
        if unknown:
            raise ValueError(f"unknown demand archetypes {sorted(unknown)}")
        unknown = set(self.commuting_mix) - set(PATTERNS)
        if unknown:
            raise ValueError(f"unknown commuting patterns {sorted(unknown)}")
        if self.tower_flats[0] < 3 or self.tower_flats[1] < self.tower_flats[0]:
            raise ValueError("tower_flats must be a range starting at >= 3")


@dataclass
class TownBundle:
    year: int
    buildings: list[Building]
    pv_profiles: dict[Orientation, TimeSeries]
    diaries: list[TripDiary]
    examples: list[LabeledBuildingExample]
    true_types: dict[str, BuildingType]
    census_flat_total: int
    total_vehicles_target: int


def _pick(rng, dist: Mapping):
    keys, probs = check_distribution(dist)
    return keys[rng.choice(len(keys), p=probs)]


def demand_series(
    annual_kwh: float, archetype: str, year: int, rng: np.random.Generator
) -> TimeSeries:
    """Hourly demand following an archetype shape, summing to ``annual_kwh``."""
    weekday, weekend = (np.asarray(s) for s in ARCHETYPES[archetype])
    start = datetime(year, 1, 1)
    n = year_hours(year)
    ts = TimeSeries.zeros(start, n)
    wd = ts.weekday_index()
    hour = np.arange(n) % 24
    doy = np.arange(n) // 24
    base = np.where(wd >= 5, weekend[hour], weekday[hour])
    season = 1.0 + 0.25 * np.cos(2 * np.pi * (doy - 15) / 365.0)
    noise = rng.lognormal(0.0, 0.25, n)
    shape = base * season * noise
    return TimeSeries(start, shape * (annual_kwh / shape.sum()))


_NORMALS = {
    Orientation.S: [(0.0, -1.0)],
    Orientation.N: [(0.0, 1.0)],
    Orientation.EW: [(1.0, 0.0), (-1.0, 0.0)],
    Orientation.FLAT: [(0.0, 0.0)],
}


def pv_profiles(year: int, rng: np.random.Generator, tilt_deg: float = 35.0) -> dict[Orientation, TimeSeries]:
    """Clear-sky shaped PV output in kW per kWp for each roof orientation.

    One random clearness factor per day is shared by all orientations; the
    library is scaled so a south roof yields ``SOUTH_YIELD_KWH_PER_KWP``.
    """
    n = year_hours(year)
    start = datetime(year, 1, 1)
    hours = np.arange(n)
    doy = hours // 24 + 1
    # mid-hour solar time, clock time is UTC+1
    solar_time = (hours % 24) + 0.5 - 1.0 + LONGITUDE / 15.0
    decl = np.radians(23.45) * np.sin(2 * np.pi * (284 + doy) / 365.0)
    omega = np.radians(15.0 * (solar_time - 12.0))
    phi = np.radians(LATITUDE)
    up = np.sin(phi) * np.sin(decl) + np.cos(phi) * np.cos(decl) * np.cos(omega)
    east = -np.cos(decl) * np.sin(omega)
    north = np.cos(phi) * np.sin(decl) - np.sin(phi) * np.cos(decl) * np.cos(omega)
    sun_up = up > 0.02
    air_mass = np.where(sun_up, 1.0 / np.maximum(up, 0.02), np.inf)
    dni = np.where(sun_up, 1000.0 * 0.7 ** (air_mass ** 0.678), 0.0)
    season = 0.5 + 0.25 * np.sin(2 * np.pi * (np.arange(366) - 80) / 365.0)
    day_clear = rng.beta(2.0 * season / (1 - season), 2.0)[: n // 24 + 1]
    clear = day_clear[doy - 1]
    beta = np.radians(tilt_deg)
    raw = {}
    for o, normals in _NORMALS.items():
        acc = np.zeros(n)
        for ne, nn in normals:
            tilt = 0.0 if o == Orientation.FLAT else beta
            nx, ny, nz = ne * np.sin(tilt), nn * np.sin(tilt), np.cos(tilt)
            cos_inc = np.maximum(nx * east + ny * north + nz * up, 0.0)
            diffuse = 0.12 * dni * (1 + nz) / 2
            acc += (dni * cos_inc + diffuse) / len(normals)
        raw[o] = np.where(sun_up, acc * clear, 0.0) / 1000.0
    scale = SOUTH_YIELD_KWH_PER_KWP / raw[Orientation.S].sum()
    return {o: TimeSeries(start, np.minimum(v * scale, 1.0)) for o, v in raw.items()}


# ---------------------------------------------------------------- trip diaries

def _minute(rng, mean_hhmm: float, sd_min: float, lo: float = 0, hi: float = 24 * 60 - 1) -> int:
    return int(np.clip(rng.normal(mean_hhmm * 60, sd_min), lo, hi))


def _drive_minutes(km: float, rng) -> int:
    return max(5, int(round(km / 40.0 * 60 + rng.uniform(2, 10))))


def _chain(rng, day: int, dep_min: int, legs_km, stays_min) -> list[Trip]:
    """Trips of one home-based chain starting at ``dep_min`` of ``day``."""
    trips = []
    t = day * MINUTES_PER_DAY + dep_min
    for i, km in enumerate(legs_km):
        arr = t + _drive_minutes(km, rng)
        trips.append(Trip(t, arr, round(float(km), 2), i == 0, i == len(legs_km) - 1))
        if i < len(legs_km) - 1:
            t = arr + stays_min[i]
    return trips


def _errand(rng, day: int, mean_hour: float) -> list[Trip]:
    if rng.random() < 0.35:
        a, b = rng.lognormal(np.log(4), 0.7, 2)
        c = rng.lognormal(np.log(4), 0.5)
        return _chain(rng, day, _minute(rng, mean_hour, 60), [a, b, c],
                      [int(rng.integers(15, 60)), int(rng.integers(15, 90))])
    d = rng.lognormal(np.log(5), 0.8)
    return _chain(rng, day, _minute(rng, mean_hour, 75), [d, d], [int(rng.integers(20, 120))])


def _commute(rng, day: int, work_km: float, start_h: float, hours: float) -> list[Trip]:
    dep = _minute(rng, start_h, 30, 4 * 60, 11 * 60)
    stay = int(max(60, rng.normal(hours * 60, 45)))
    return _chain(rng, day, dep, [work_km, work_km], [stay])


def _fulltime(rng) -> list[list[Trip]]:
    chains = []
    work_km = float(np.clip(rng.lognormal(np.log(14), 0.7), 1.5, 80))
    start_h = rng.normal(7.2, 0.5)
    for day in range(5):
        if rng.random() < 0.93:
            chains.append(_commute(rng, day, work_km, start_h, 8.8))
            if rng.random() < 0.25:
                chains.append(_errand(rng, day, 19.0))
    if rng.random() < 0.8:
        chains.append(_errand(rng, 5, 10.5))
    if rng.random() < 0.5:
        chains.append(_errand(rng, 6, 14.5))
    return chains


def _parttime(rng) -> list[list[Trip]]:
    chains = []
    work_km = float(np.clip(rng.lognormal(np.log(9), 0.6), 1.0, 50))
    days = sorted(rng.choice(5, size=int(rng.integers(3, 5)), replace=False))
    for day in range(5):
        if day in days:
            chains.append(_commute(rng, int(day), work_km, rng.normal(7.8, 0.4), 5.0))
        elif rng.random() < 0.6:
            chains.append(_errand(rng, day, 10.5))
    if rng.random() < 0.75:
        chains.append(_errand(rng, 5, 10.0))
    return chains


def _retired(rng) -> list[list[Trip]]:
    chains = []
    for day in sorted(rng.choice(7, size=int(rng.integers(4, 7)), replace=False)):
        chains.append(_errand(rng, int(day), 10.0))
    return chains


def _occasional(rng) -> list[list[Trip]]:
    chains = []
    for day in sorted(rng.choice(7, size=int(rng.integers(1, 4)), replace=False)):
        chains.append(_errand(rng, int(day), 13.0))
    if rng.random() < 0.1:
        # overnight stay away, back the next morning
        day = int(rng.integers(0, 6))
        km = float(rng.lognormal(np.log(40), 0.5))
        chains.append(_chain(rng, day, 19 * 60, [km, km], [14 * 60]))
    return chains


PATTERNS = {
    "fulltime": _fulltime,
    "parttime": _parttime,
    "retired": _retired,
    "occasional": _occasional,
}


def synthetic_diary(person_id: str, pattern: str, rng: np.random.Generator) -> TripDiary:
    """One week of trips; activity chains that would overlap an earlier one are skipped."""
    trips: list[Trip] = []
    for chain in sorted(PATTERNS[pattern](rng), key=lambda c: c[0].departure):
        if trips and chain[0].departure < trips[-1].arrival:
            continue
        if chain[-1].arrival > MINUTES_PER_WEEK:
            continue
        trips.extend(chain)
    return TripDiary(person_id, trips)


# ---------------------------------------------------------------- buildings

def _building(i: int, spec: SyntheticTownSpec, rng) -> tuple[Building, BuildingType, int]:
    btype = BuildingType(_pick(rng, spec.building_type_mix))
    has_hp = bool(rng.random() < spec.heat_pump_share)
    has_pv = bool(rng.random() < spec.existing_pv_share)
    median_roof, sigma = spec.roof_area_m2
    if btype == BuildingType.SINGLE_FAMILY:
        flats, meters = 1, 1 + int(has_hp)
        volume = rng.lognormal(np.log(550), 0.25)
        roof = rng.lognormal(np.log(median_roof), sigma)
    elif btype == BuildingType.TWO_FAMILY:
        flats, meters = 2, 2 + int(has_hp)
        volume = rng.lognormal(np.log(900), 0.25)
        roof = rng.lognormal(np.log(median_roof * 1.3), sigma)
    else:
        flats = int(rng.integers(spec.tower_flats[0], spec.tower_flats[1] + 1))
        meters = int(round(flats / 0.85))
        volume = flats * rng.lognormal(np.log(280), 0.2)
        roof = rng.lognormal(np.log(median_roof * 0.5 * flats ** 0.7), sigma)
    b = Building(
        id=f"B{i:05d}",
        roof_area=round(float(roof), 1),
        roof_orientation=Orientation(_pick(rng, spec.orientation_mix)),
        volume=round(float(volume), 1),
        meter_count=meters,
        has_pv=has_pv,
        has_heat_pump=has_hp,
        has_ev=bool(rng.random() < spec.existing_ev_share),
    )
    return b, btype, flats


def generate_synthetic_town(spec: Optional[SyntheticTownSpec] = None, seed: int = 0) -> TownBundle:
    """Draw a complete synthetic town; identical seeds give identical towns."""
    spec = spec or SyntheticTownSpec()
    buildings, types, flats_total = [], {}, 0
    b_rng = substream(seed, "town", "buildings")
    for i in range(spec.n_buildings):
        b, btype, flats = _building(i, spec, b_rng)
        d_rng = substream(seed, "town", "demand", b.id)
        median_kwh, sigma = spec.annual_kwh_per_flat
        annual = float(sum(d_rng.lognormal(np.log(median_kwh), sigma) for _ in range(flats)))
        archetype = _pick(d_rng, spec.archetype_mix)
        b = replace(b, demand=demand_series(annual, archetype, spec.year, d_rng))
        buildings.append(b)
        types[b.id] = btype
        flats_total += flats

    s_rng = substream(seed, "town", "survey")
    examples = [
        LabeledBuildingExample(b.meter_count, b.volume, b.has_pv, b.has_heat_pump, types[b.id])
        for b in buildings if s_rng.random() < spec.survey_share
    ]
    present = {e.label for e in examples}
    for b in buildings:
        # the survey must cover every class that occurs in town
        if types[b.id] not in present:
            examples.append(LabeledBuildingExample(
                b.meter_count, b.volume, b.has_pv, b.has_heat_pump, types[b.id]))
            present.add(types[b.id])

    p_rng = substream(seed, "town", "diaries")
    diaries = [
        synthetic_diary(f"D{k:05d}", _pick(p_rng, spec.commuting_mix), p_rng)
        for k in range(spec.diary_pool_size)
    ]
    return TownBundle(
        year=spec.year,
        buildings=buildings,
        pv_profiles=pv_profiles(spec.year, substream(seed, "town", "pv")),
        diaries=diaries,
        examples=examples,
        true_types=types,
        census_flat_total=flats_total,
        total_vehicles_target=int(round(flats_total * spec.vehicles_per_flat)),
    )
