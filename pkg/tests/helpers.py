"""Small builders shared by the test modules."""
from datetime import datetime

import numpy as np

from evtwin.model import MINUTES_PER_DAY, Building, Tour, Trip, Vehicle
from evtwin.timeseries import TimeSeries

YEAR = 2021
START = datetime(YEAR, 1, 1)
N_HOURS = 8760


def minute(day: int, hhmm: str) -> int:
    h, m = map(int, hhmm.split(":"))
    return day * MINUTES_PER_DAY + h * 60 + m


def trip(day, dep, arr, km, from_home=False, to_home=False) -> Trip:
    d, a = minute(day, dep), minute(day, arr)
    if a < d:
        a += MINUTES_PER_DAY
    return Trip(d, a, km, from_home, to_home)


def round_trip(owner, day, dep, arr, km_each) -> Tour:
    """Home -> somewhere -> home, the return leaving one hour before ``arr``."""
    out_arr = minute(day, dep) + 30
    back_dep = minute(day, arr) - 30
    return Tour(owner, (
        Trip(minute(day, dep), out_arr, km_each, True, False),
        Trip(back_dep, minute(day, arr), km_each, False, True),
    ))


def vehicle(vid="v", tours=(), capacity=None, drivers=("p",)) -> Vehicle:
    return Vehicle(vid, "h", "b", drivers[0], list(drivers[1:]), capacity, list(tours))


def series(values, start=START) -> TimeSeries:
    return TimeSeries(start, np.asarray(values, dtype=float))


def building(bid="b", roof=100.0, orientation="S", meters=1, demand=None, **kw) -> Building:
    return Building(bid, roof, orientation, 500.0, meters, demand=demand, **kw)


def random_diary(rng: np.random.Generator, pid: str = "p"):
    """Unstructured week of trips: random times, flags and overlaps."""
    from evtwin.mobility import TripDiary
    from evtwin.model import MINUTES_PER_WEEK

    trips = []
    for _ in range(int(rng.integers(0, 25))):
        dep = int(rng.integers(0, MINUTES_PER_WEEK))
        arr = dep + int(rng.integers(-5, 600))
        trips.append(Trip(dep, arr, float(rng.exponential(10.0)),
                          bool(rng.random() < 0.5), bool(rng.random() < 0.5)))
    return TripDiary(pid, sorted(trips, key=lambda t: (t.departure, t.arrival)))


def brute_force_overlaps(intervals) -> int:
    """Number of intersecting pairs among half-open ``(start, end)`` intervals."""
    n = 0
    for i in range(len(intervals)):
        for j in range(i + 1, len(intervals)):
            a, b = intervals[i], intervals[j]
            if max(a[0], b[0]) < min(a[1], b[1]):
                n += 1
    return n


def check_fsm_trace(result, capacity: float, threshold: float = 0.35, eps: float = 1e-9) -> None:
    """Assert the state-machine safety properties on a traced :class:`EvResult`."""
    from evtwin.ev import Mode

    mode = result.trace["mode"]
    soc = result.trace["soc"]
    charge = result.charging_series.values
    assert np.all(soc >= -eps) and np.all(soc <= capacity + eps), "soc out of bounds"
    assert np.all(charge[mode != Mode.PARKED_CONNECTED] == 0), "charging while not connected"
    assert np.all(charge >= 0)
    for hour, frac, m in result.trace["arrivals"]:
        if frac < threshold:
            assert m == Mode.PARKED_CONNECTED, f"low-soc arrival left disconnected at hour {hour}"
        if hour + 1 < len(mode) and mode[hour + 1] != Mode.DRIVING:
            assert mode[hour + 1] == m, f"connection changed right after arrival at hour {hour}"
    parked = mode != Mode.DRIVING
    both = parked[:-1] & parked[1:]
    assert np.all(mode[:-1][both] == mode[1:][both]), "connection changed while parked"
