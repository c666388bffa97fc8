"""Domain types of the synthesized town.

Trip and tour times are minutes since Monday 00:00 of the simulated week.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .timeseries import TimeSeries

MINUTES_PER_DAY = 24 * 60
MINUTES_PER_WEEK = 7 * MINUTES_PER_DAY


class Orientation(str, Enum):
    S = "S"
    EW = "E/W"
    N = "N"
    FLAT = "flat"


class BuildingType(str, Enum):
    SINGLE_FAMILY = "single-family"
    TWO_FAMILY = "two-family"
    APARTMENT_TOWER = "apartment-tower"


class FamilyType(str, Enum):
    ONE_PERSON = "one-person"
    COUPLE_NO_CHILDREN = "couple-no-children"
    SINGLE_PARENT = "single-parent"
    COUPLE_WITH_CHILDREN = "couple-with-children"
    MULTI_PERSON = "multi-person-no-nuclear-family"


FAMILY_TYPES = tuple(FamilyType)


@dataclass(frozen=True)
class Building:
    id: str
    roof_area: float
    roof_orientation: Orientation
    volume: float
    meter_count: int
    has_pv: bool = False
    has_heat_pump: bool = False
    demand: Optional[TimeSeries] = field(default=None, compare=False, repr=False)
    has_ev: bool = False

    def __post_init__(self):
        if not self.roof_area >= 0:
            raise ValueError(f"building {self.id}: roof_area must be >= 0")
        if self.meter_count < 1:
            raise ValueError(f"building {self.id}: meter_count must be >= 1")
        if not isinstance(self.roof_orientation, Orientation):
            object.__setattr__(self, "roof_orientation", Orientation(self.roof_orientation))


@dataclass(frozen=True)
class Trip:
    departure: int
    arrival: int
    distance: float
    origin_is_home: bool
    destination_is_home: bool

    @property
    def is_valid(self) -> bool:
        return self.arrival > self.departure and self.distance >= 0


@dataclass(frozen=True)
class Tour:
    owner_id: str
    trips: tuple[Trip, ...]

    def __post_init__(self):
        if not self.trips:
            raise ValueError("a tour needs at least one trip")
        if not self.trips[0].origin_is_home or not self.trips[-1].destination_is_home:
            raise ValueError("a tour must start and end at home")
        for prev, nxt in zip(self.trips, self.trips[1:]):
            if nxt.departure < prev.arrival:
                raise ValueError("trips of a tour overlap")

    @property
    def departure(self) -> int:
        return self.trips[0].departure

    @property
    def arrival(self) -> int:
        return self.trips[-1].arrival

    @property
    def total_distance(self) -> float:
        return sum(t.distance for t in self.trips)

    @property
    def longest_leg(self) -> float:
        return max(t.distance for t in self.trips)

    def overlaps(self, other: "Tour") -> bool:
        return self.departure < other.arrival and other.departure < self.arrival


@dataclass(frozen=True)
class Person:
    id: str
    household_id: str
    is_adult: bool
    trips: tuple[Trip, ...] = ()


@dataclass
class Household:
    id: str
    building_id: str
    family_type: FamilyType
    adults: int
    children: int
    persons: list[Person] = field(default_factory=list)
    vehicle_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.adults < 1:
            raise ValueError(f"household {self.id}: needs at least one adult")
        if self.children < 0:
            raise ValueError(f"household {self.id}: negative children")
        if self.family_type == FamilyType.ONE_PERSON and self.adults + self.children != 1:
            raise ValueError(f"household {self.id}: one-person household with {self.size} members")

    @property
    def size(self) -> int:
        return self.adults + self.children

    @property
    def adult_ids(self) -> list[str]:
        return [p.id for p in self.persons if p.is_adult]


@dataclass
class Vehicle:
    id: str
    household_id: str
    home_building_id: str
    primary_driver_id: str
    secondary_driver_ids: list[str] = field(default_factory=list)
    battery_capacity: Optional[float] = None
    tours: list[Tour] = field(default_factory=list)

    @property
    def driver_ids(self) -> list[str]:
        return [self.primary_driver_id, *self.secondary_driver_ids]


def weekday_of(minute: int) -> int:
    """Weekday (Monday=0) of a minute offset within the week."""
    return (minute // MINUTES_PER_DAY) % 7


def hhmm(minute: int) -> str:
    m = minute % MINUTES_PER_DAY
    return f"{m // 60:02d}:{m % 60:02d}"
