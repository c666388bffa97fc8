"""Person trip diaries to home-centered tours, and tours to vehicle usage."""
from __future__ import annotations

import logging
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import MINUTES_PER_WEEK, Tour, Trip, Vehicle, weekday_of

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModeChoiceTable:
    """Probability of driving a car by longest-leg distance bin.

    Bins are half-open ``[edge[i], edge[i+1])``; the last bin is unbounded.
    """

    distance_bin_edges: tuple[float, ...]
    p_car_exclusive: tuple[float, ...]
    p_car_shared: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.distance_bin_edges)
        excl = tuple(float(p) for p in self.p_car_exclusive)
        shared = tuple(float(p) for p in self.p_car_shared)
        if not edges or edges[0] != 0.0:
            raise ValueError("distance bins must start at 0 km")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("distance bin edges must be strictly increasing")
        if edges[-1] < 50.0:
            raise ValueError("distance bins must cover at least 0-50 km")
        for name, ps in (("p_car_exclusive", excl), ("p_car_shared", shared)):
            if len(ps) != len(edges):
                raise ValueError(f"{name} needs one probability per bin ({len(edges)})")
            if any(not 0.0 <= p <= 1.0 for p in ps):
                raise ValueError(f"{name} must lie in [0, 1]")
        object.__setattr__(self, "distance_bin_edges", edges)
        object.__setattr__(self, "p_car_exclusive", excl)
        object.__setattr__(self, "p_car_shared", shared)

    @classmethod
    def default(cls) -> "ModeChoiceTable":
        """Rural-town table: few car trips below 2 km, most between 10 and 50 km."""
        return cls(
            distance_bin_edges=(0, 1, 2, 5, 10, 20, 50),
            p_car_exclusive=(0.25, 0.45, 0.65, 0.8, 0.87, 0.88, 0.85),
            p_car_shared=(0.15, 0.3, 0.45, 0.55, 0.6, 0.6, 0.55),
        )

    @classmethod
    def constant(cls, p: float) -> "ModeChoiceTable":
        edges = (0.0, 50.0)
        return cls(edges, (p, p), (p, p))

    def to_dict(self) -> dict:
        return {
            "distance_bin_edges": list(self.distance_bin_edges),
            "p_car_exclusive": list(self.p_car_exclusive),
            "p_car_shared": list(self.p_car_shared),
        }


@dataclass
class TripDiary:
    """One week of trips of one person, chronologically ordered."""

    person_id: str
    trips: list[Trip] = field(default_factory=list)

    def by_weekday(self) -> dict[int, list[Trip]]:
        days: dict[int, list[Trip]] = {d: [] for d in range(7)}
        for t in self.trips:
            days[weekday_of(t.departure)].append(t)
        return days


def mode_probability(table: ModeChoiceTable, d_trip: float, shared: bool) -> float:
    if d_trip < 0:
        raise ValueError("trip distance must be >= 0")
    i = bisect_right(table.distance_bin_edges, d_trip) - 1
    probs = table.p_car_shared if shared else table.p_car_exclusive
    return probs[i]


def remove_overlaps(tours: Sequence[Tour]) -> list[Tour]:
    """Keep tours in departure order, dropping any that overlap a kept one."""
    kept: list[Tour] = []
    for tour in sorted(tours, key=lambda t: (t.departure, t.arrival)):
        if kept and tour.departure < kept[-1].arrival:
            continue
        kept.append(tour)
    return kept


def build_tours(diary: TripDiary, diagnostics: Optional[Counter] = None) -> list[Tour]:
    """Merge a person's trips into home-centered tours.

    A tour opens at a trip leaving home and closes at the next trip arriving
    home. Trips that never get back home, tours ending after the week, and
    tours overlapping an earlier one are dropped. Malformed trips are
    skipped; counts of everything dropped go into ``diagnostics``.
    """
    diag = diagnostics if diagnostics is not None else Counter()
    tours = []
    current: list[Trip] = []
    for trip in sorted(diary.trips, key=lambda t: (t.departure, t.arrival)):
        if not trip.is_valid:
            diag["malformed_trips"] += 1
            continue
        if trip.origin_is_home:
            if current:
                diag["unfinished_tours"] += 1
            current = [trip]
        elif current:
            if trip.departure < current[-1].arrival:
                diag["malformed_trips"] += 1
                continue
            current.append(trip)
        else:
            diag["stray_trips"] += 1
            continue
        if current and current[-1].destination_is_home:
            if current[-1].arrival > MINUTES_PER_WEEK:
                diag["past_week_end"] += 1
            else:
                tours.append(Tour(diary.person_id, tuple(current)))
            current = []
    if current:
        diag["unfinished_tours"] += 1
    kept = remove_overlaps(tours)
    diag["overlapping_tours"] += len(tours) - len(kept)
    return kept


def sample_vehicle_tours(
    vehicle: Vehicle,
    person_tours: Mapping[str, Sequence[Tour]],
    table: ModeChoiceTable,
    rng: np.random.Generator,
) -> list[Tour]:
    """Tours a vehicle executes, given the tours of its drivers.

    The primary driver's tours are accepted with the exclusive-use
    probability, other drivers' tours with the shared-use probability. When
    accepted tours collide, the primary driver's tour wins, then the one
    departing earlier.
    """
    accepted = []
    for rank, driver in enumerate(vehicle.driver_ids):
        shared = rank > 0
        for tour in person_tours.get(driver, ()):
            if rng.random() < mode_probability(table, tour.longest_leg, shared):
                accepted.append((0 if driver == vehicle.primary_driver_id else 1, tour))
    accepted.sort(key=lambda rt: (rt[0], rt[1].departure, rt[1].arrival))
    kept: list[Tour] = []
    for _, tour in accepted:
        if not any(tour.overlaps(k) for k in kept):
            kept.append(tour)
    kept.sort(key=lambda t: t.departure)
    return kept


def sample_household_tours(
    vehicles: Sequence[Vehicle],
    person_tours: Mapping[str, Sequence[Tour]],
    table: ModeChoiceTable,
    rng: np.random.Generator,
) -> dict[str, list[Tour]]:
    """Sample the vehicles of one household in order.

    A tour taken by one vehicle is no longer offered to the household's
    later vehicles, so a person never drives two vehicles at once.
    """
    remaining = {p: list(ts) for p, ts in person_tours.items()}
    out = {}
    for v in vehicles:
        tours = sample_vehicle_tours(v, remaining, table, rng)
        taken = {id(t) for t in tours}
        for p in v.driver_ids:
            if p in remaining:
                remaining[p] = [t for t in remaining[p] if id(t) not in taken]
        out[v.id] = tours
    return out


def weekly_usage_days(tours: Sequence[Tour]) -> int:
    """Distinct weekdays on which at least one tour departs."""
    return len({weekday_of(t.departure) for t in tours})
