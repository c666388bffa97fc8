"""Flats, households, persons and vehicles for every building."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..model import (
    FAMILY_TYPES, Building, BuildingType, FamilyType, Household, Person, Vehicle,
)
from ..validation import check_distribution, check_probability_vector, check_unit_interval

log = logging.getLogger(__name__)


class CalibrationError(ValueError):
    pass


class SynthesisConfigError(ValueError):
    pass


DEFAULT_FAMILY_TYPE_FREQUENCIES = (0.38, 0.29, 0.06, 0.22, 0.05)

DEFAULT_MEMBERS = {
    FamilyType.ONE_PERSON: {1: 1.0},
    FamilyType.COUPLE_NO_CHILDREN: {2: 1.0},
    FamilyType.SINGLE_PARENT: {2: 0.6, 3: 0.3, 4: 0.1},
    FamilyType.COUPLE_WITH_CHILDREN: {3: 0.4, 4: 0.4, 5: 0.15, 6: 0.05},
    FamilyType.MULTI_PERSON: {2: 0.7, 3: 0.25, 4: 0.05},
}

DEFAULT_VEHICLES_PER_ADULTS = {
    1: {0: 0.25, 1: 0.7, 2: 0.05},
    2: {0: 0.06, 1: 0.44, 2: 0.45, 3: 0.05},
    3: {0: 0.04, 1: 0.3, 2: 0.4, 3: 0.26},
    4: {0: 0.03, 1: 0.25, 2: 0.37, 3: 0.25, 4: 0.1},
    5: {0: 0.03, 1: 0.2, 2: 0.37, 3: 0.25, 4: 0.15},
    6: {0: 0.03, 1: 0.2, 2: 0.32, 3: 0.25, 4: 0.2},
}


@dataclass
class SynthesisConfig:
    """Survey- and census-derived inputs of the population synthesis.

    ``census_flat_total`` and ``total_vehicles_target`` may be ``None`` to
    skip the respective calibration step.
    """

    family_type_frequencies: Sequence[float] = DEFAULT_FAMILY_TYPE_FREQUENCIES
    members_by_family_type: Mapping[FamilyType, Mapping[int, float]] = field(
        default_factory=lambda: dict(DEFAULT_MEMBERS))
    adult_child_share: float = 0.25
    vehicles_per_adult_count: Mapping[int, Mapping[int, float]] = field(
        default_factory=lambda: dict(DEFAULT_VEHICLES_PER_ADULTS))
    total_vehicles_target: Optional[int] = None
    census_flat_total: Optional[int] = None
    residential_meter_fraction: float = 0.85
    rng_seed: int = 0

    def __post_init__(self):
        self.family_type_frequencies = tuple(
            check_probability_vector(self.family_type_frequencies, "family_type_frequencies"))
        if len(self.family_type_frequencies) != len(FAMILY_TYPES):
            raise SynthesisConfigError("family_type_frequencies needs one entry per family type")
        self.members_by_family_type = {
            FamilyType(k): {int(n): float(p) for n, p in v.items()}
            for k, v in self.members_by_family_type.items()
        }
        for ft in FAMILY_TYPES:
            if ft not in self.members_by_family_type:
                raise SynthesisConfigError(f"members_by_family_type lacks {ft.value}")
            sizes, _ = check_distribution(self.members_by_family_type[ft], f"members[{ft.value}]")
            if min(sizes) < 1:
                raise SynthesisConfigError(f"members[{ft.value}] has sizes below 1")
        if min(self.members_by_family_type[FamilyType.ONE_PERSON]) != 1 or \
                max(self.members_by_family_type[FamilyType.ONE_PERSON]) != 1:
            raise SynthesisConfigError("one-person households must have exactly one member")
        self.vehicles_per_adult_count = {
            int(k): {int(n): float(p) for n, p in v.items()}
            for k, v in self.vehicles_per_adult_count.items()
        }
        for k, v in self.vehicles_per_adult_count.items():
            counts, _ = check_distribution(v, f"vehicles_per_adult_count[{k}]")
            if min(counts) < 0:
                raise SynthesisConfigError("vehicle counts must be >= 0")
        check_unit_interval(self.adult_child_share, "adult_child_share")
        check_unit_interval(self.residential_meter_fraction, "residential_meter_fraction")
        if self.total_vehicles_target is not None and self.total_vehicles_target < 0:
            raise SynthesisConfigError("total_vehicles_target must be >= 0")
        if self.census_flat_total is not None and self.census_flat_total <= 0:
            raise SynthesisConfigError("census_flat_total must be > 0")


def estimate_flats(b: Building, t: BuildingType, residential_meter_fraction: float = 0.85) -> int:
    """Number of flats implied by the building type and its meters."""
    if b.meter_count < 1:
        raise ValueError("meter_count must be >= 1")
    if t == BuildingType.SINGLE_FAMILY:
        return 1
    if t == BuildingType.TWO_FAMILY:
        return 2
    # int(x + 0.5) so 2.5 rounds up, unlike Python's banker's rounding
    return max(3, int(b.meter_count * residential_meter_fraction + 0.5))


def largest_remainder(quotas: np.ndarray, total: int) -> np.ndarray:
    """Integers summing to ``total`` that round ``quotas`` by largest remainder.

    Remainder ties go to the lower index.
    """
    quotas = np.asarray(quotas, dtype=float)
    base = np.floor(quotas).astype(int)
    short = int(total - base.sum())
    if short < 0 or short > len(quotas):
        raise CalibrationError("quotas do not sum to the requested total")
    rem = quotas - base
    order = np.lexsort((np.arange(len(quotas)), -rem))
    base[order[:short]] += 1
    return base


def apportion(weights: Sequence[int], total: int) -> np.ndarray:
    """Largest-remainder split of ``total`` in proportion to integer ``weights``.

    Remainders are compared exactly in integers, so equal fractions tie and
    go to the lower index.
    """
    w = np.asarray(weights, dtype=np.int64)
    s = int(w.sum())
    if s <= 0 or total < 0:
        raise CalibrationError("weights must have a positive sum and total must be >= 0")
    num = w * int(total)
    base, rem = num // s, num % s
    short = int(total - base.sum())
    order = np.lexsort((np.arange(len(w)), -rem))
    base[order[:short]] += 1
    return base


def calibrate_flats(
    flats: Sequence[int], types: Sequence[BuildingType], census_flat_total: int
) -> list[int]:
    """Scale apartment-tower flat counts so the town total matches the census."""
    if census_flat_total <= 0:
        raise CalibrationError("census_flat_total must be > 0")
    flats = np.asarray(flats, dtype=int)
    tower = np.array([t == BuildingType.APARTMENT_TOWER for t in types], dtype=bool)
    fixed = int(flats[~tower].sum())
    tower_total = int(flats[tower].sum())
    if census_flat_total < fixed:
        raise CalibrationError(
            f"census total {census_flat_total} is below the {fixed} flats of "
            "single- and two-family buildings")
    if tower_total == 0:
        if census_flat_total != fixed:
            raise CalibrationError("no apartment towers to absorb the census difference")
        return flats.tolist()
    target = census_flat_total - fixed
    if target == tower_total:
        return flats.tolist()
    out = flats.copy()
    out[tower] = apportion(flats[tower], target)
    return out.tolist()


def _draw(rng: np.random.Generator, dist: Mapping[int, float]) -> int:
    keys, probs = check_distribution(dist)
    return int(keys[rng.choice(len(keys), p=probs)])


def sample_households(
    flats: Sequence[tuple[str, int]], cfg: SynthesisConfig, rng: np.random.Generator
) -> list[Household]:
    """One household per flat with a family type, members and persons.

    Parameters
    ----------
    flats : sequence of (building_id, flat_count)
    """
    freq = np.asarray(cfg.family_type_frequencies)
    households = []
    for building_id, n_flats in flats:
        for k in range(int(n_flats)):
            hid = f"{building_id}/h{k}"
            ft = FAMILY_TYPES[rng.choice(len(FAMILY_TYPES), p=freq)]
            size = _draw(rng, cfg.members_by_family_type[ft])
            if ft == FamilyType.ONE_PERSON:
                adults, kids = 1, 0
            elif ft == FamilyType.SINGLE_PARENT:
                adults, kids = 1, max(size - 1, 0)
            elif ft in (FamilyType.COUPLE_NO_CHILDREN, FamilyType.COUPLE_WITH_CHILDREN):
                adults, kids = min(2, size), max(size - 2, 0)
                if ft == FamilyType.COUPLE_NO_CHILDREN:
                    adults, kids = adults + kids, 0
            else:
                adults, kids = size, 0
            if kids:
                grown = int(rng.binomial(kids, cfg.adult_child_share))
                adults, kids = adults + grown, kids - grown
            persons = [Person(f"{hid}/p{i}", hid, is_adult=i < adults) for i in range(adults + kids)]
            households.append(Household(hid, building_id, ft, adults, kids, persons))
    return households


def _adjust_counts(
    counts: np.ndarray, weights: np.ndarray, target: int, rng: np.random.Generator
) -> np.ndarray:
    """Random unit increments/decrements until ``counts`` sums to ``target``.

    Households are picked proportionally to ``weights`` (their adults).
    """
    counts = counts.copy()
    while True:
        diff = target - int(counts.sum())
        if diff == 0:
            return counts
        if diff > 0:
            p = weights / weights.sum()
            picks = rng.choice(len(counts), size=diff, p=p)
            np.add.at(counts, picks, 1)
        else:
            w = np.where(counts > 0, weights, 0.0)
            picks = rng.choice(len(counts), size=-diff, p=w / w.sum())
            for i in picks:
                if counts[i] > 0 and counts.sum() > target:
                    counts[i] -= 1


def assign_vehicles(
    households: Sequence[Household], cfg: SynthesisConfig, rng: np.random.Generator
) -> list[Vehicle]:
    """Draw vehicles per household from its adult count and attach drivers.

    The first adults become primary drivers, one per vehicle; adults left
    over share the household's vehicles as secondary drivers. When a
    household has more vehicles than adults, adults are primary drivers of
    several vehicles.
    """
    if cfg.total_vehicles_target is not None and cfg.total_vehicles_target < 0:
        raise SynthesisConfigError("total_vehicles_target must be >= 0")
    counts = np.zeros(len(households), dtype=int)
    for i, hh in enumerate(households):
        dist = cfg.vehicles_per_adult_count.get(hh.adults)
        if dist is None:
            raise SynthesisConfigError(f"vehicles_per_adult_count has no entry for {hh.adults} adults")
        counts[i] = _draw(rng, dist)
    if cfg.total_vehicles_target is not None and households:
        weights = np.array([hh.adults for hh in households], dtype=float)
        counts = _adjust_counts(counts, weights, cfg.total_vehicles_target, rng)

    vehicles = []
    for hh, n in zip(households, counts):
        adults = hh.adult_ids
        hh.vehicle_ids = []
        if n == 0:
            continue
        own = [Vehicle(f"{hh.id}/v{j}", hh.id, hh.building_id, adults[j % len(adults)])
               for j in range(n)]
        for k, person in enumerate(adults[n:]):
            own[k % n].secondary_driver_ids.append(person)
        hh.vehicle_ids = [v.id for v in own]
        vehicles.extend(own)
    log.debug("assigned %d vehicles to %d households", len(vehicles), len(households))
    return vehicles
