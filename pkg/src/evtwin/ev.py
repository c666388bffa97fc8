"""Hourly finite-state machine of an EV charging at home.

The EV is either driving or parked at home; a parked EV is connected to the
home charging station or not. The connection is decided once per arrival
and holds until the next departure. A connected EV charges immediately at
station power until full.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import IntEnum
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import MINUTES_PER_DAY, MINUTES_PER_WEEK, Tour, Vehicle
from .timeseries import TimeSeries, year_hours
from .validation import check_distribution, check_positive, check_unit_interval

EPS = 1e-9


class Mode(IntEnum):
    DRIVING = 0
    PARKED_CONNECTED = 1
    PARKED_DISCONNECTED = 2


class ChargeState(IntEnum):
    FULL = 0
    MUST_CHARGE = 1
    MAY_CHARGE = 2


def _default_connection_model() -> dict[int, float]:
    return {1: 1 / 6, 2: 1 / 6, 3: 1 / 6, 4: 0.5}


@dataclass
class EvParams:
    """EV and home charging station parameters.

    ``connection_model`` maps a plug-in interval ``k`` (plug in on every
    k-th arrival) to the share of vehicles using it.
    """

    battery_capacity: float = 60.0
    consumption: float = 0.20
    station_power: float = 11.0
    connect_threshold_soc: float = 0.35
    connection_model: Mapping[int, float] = field(default_factory=_default_connection_model)

    def __post_init__(self):
        check_positive(self.battery_capacity, "battery_capacity")
        check_positive(self.consumption, "consumption")
        check_positive(self.station_power, "station_power")
        check_unit_interval(self.connect_threshold_soc, "connect_threshold_soc")
        self.connection_model = {int(k): float(p) for k, p in self.connection_model.items()}
        intervals, _ = check_distribution(self.connection_model, "connection_model")
        if min(intervals) < 1:
            raise ValueError("plug-in intervals must be >= 1")

    def sample_plug_interval(self, rng: np.random.Generator) -> int:
        keys, probs = check_distribution(self.connection_model)
        return int(keys[rng.choice(len(keys), p=probs)])


@dataclass(slots=True)
class EvState:
    capacity: float
    soc: float
    mode: Mode = Mode.PARKED_DISCONNECTED
    charge_state: Optional[ChargeState] = None
    arrivals_since_last_plug: int = 0
    plug_interval: int = 1
    # running tallies
    consumed_kwh: float = 0.0
    unserved_kwh: float = 0.0
    plug_in_events: int = 0
    forced_plug_ins: int = 0

    @property
    def soc_fraction(self) -> float:
        return self.soc / self.capacity


@dataclass
class EvResult:
    charging_series: TimeSeries
    unserved_km: float
    plug_in_events: int
    forced_plug_ins: int
    consumed_kwh: float
    start_soc: float
    end_soc: float
    plug_interval: int
    trace: Optional[dict] = None

    @property
    def charged_kwh(self) -> float:
        return self.charging_series.total()


def tour_energy(distance: float, consumption: float = 0.20) -> float:
    """Battery energy in kWh for ``distance`` km."""
    if distance < 0:
        raise ValueError("distance must be >= 0")
    return distance * consumption


def connection_decision(state: EvState, params: EvParams, rng: Optional[np.random.Generator] = None) -> bool:
    """Whether the EV is plugged in on this arrival.

    Updates the arrival counter and plug-in tallies of ``state``. ``rng`` is
    accepted for interface symmetry; the plug-in interval is drawn once per
    vehicle, so the decision itself is deterministic.
    """
    forced = state.soc_fraction < params.connect_threshold_soc
    plug = forced or state.arrivals_since_last_plug + 1 >= state.plug_interval
    if plug:
        state.arrivals_since_last_plug = 0
        state.plug_in_events += 1
        if forced:
            state.forced_plug_ins += 1
    else:
        state.arrivals_since_last_plug += 1
    return plug


def _charge_state(soc: float, capacity: float, next_need: float) -> ChargeState:
    if soc >= capacity - EPS:
        return ChargeState.FULL
    if soc < next_need:
        return ChargeState.MUST_CHARGE
    return ChargeState.MAY_CHARGE


DEPART, DRIVE, ARRIVE = 0, 1, 2


class DriveSchedule:
    """Tours compiled onto an hourly grid of ``n_hours``.

    A tour occupies every hour slot it touches; its energy is drawn in
    proportion to the minutes it spends in each slot.
    """

    def __init__(self, tours: Sequence[tuple[int, int, float]], n_hours: int):
        """``tours`` are ``(departure_min, arrival_min, energy_kwh)``, non-overlapping."""
        tours = sorted(tours)
        prev_arr = -1
        for dep, arr, _ in tours:
            if dep < prev_arr:
                raise ValueError("tours overlap")
            if arr <= dep or dep < 0 or arr > n_hours * 60:
                raise ValueError(f"tour ({dep}, {arr}) outside horizon or empty")
            prev_arr = arr
        self.n_hours = n_hours
        self.tours = tours
        dep = np.array([t[0] for t in tours], dtype=np.int64)
        arr = np.array([t[1] for t in tours], dtype=np.int64)
        self.energy = np.array([t[2] for t in tours], dtype=float)
        first = dep // 60
        last = -(-arr // 60) - 1
        lengths = last - first + 1
        self.offsets = np.concatenate([[0], np.cumsum(lengths)])
        owner = np.repeat(np.arange(len(tours)), lengths)
        hours = first[owner] + np.arange(self.offsets[-1]) - self.offsets[:-1][owner]
        minutes = np.minimum(arr[owner], hours * 60 + 60) - np.maximum(dep[owner], hours * 60)
        self.flat_shares = self.energy[owner] * minutes / (arr - dep)[owner] if len(tours) else np.zeros(0)
        self.needs = np.add.reduceat(self.flat_shares, self.offsets[:-1]).tolist() if len(tours) else []
        self.first = first.tolist()
        self.last = last.tolist()
        # energy of the next tour departing at or after each hour
        energies = np.append(self.energy, 0.0)
        idx = np.searchsorted(first, np.arange(n_hours + 1), side="left")
        self.next_need = energies[idx]
        self._events = None

    def shares(self, k: int) -> np.ndarray:
        """Energy drawn by tour ``k`` in each of its hour slots."""
        return self.flat_shares[self.offsets[k]:self.offsets[k + 1]]

    @classmethod
    def from_minutes(cls, tours, n_hours: int) -> "DriveSchedule":
        return cls(tours, n_hours)

    @property
    def events(self) -> dict[int, list[tuple[int, float]]]:
        """Per-hour event lists consumed by :func:`step_ev`."""
        if self._events is None:
            events: dict[int, list[tuple[int, float]]] = {}
            for k, (f, l) in enumerate(zip(self.first, self.last)):
                energy, shares = self.energy[k], self.shares(k)
                events.setdefault(f, []).append((DEPART, energy))
                for h, e in zip(range(f, l + 1), shares):
                    events.setdefault(h, []).append((DRIVE, float(e)))
                events[l].append((ARRIVE, 0.0))
            self._events = events
        return self._events

    def need_after(self, hour: int) -> float:
        return float(self.next_need[min(hour + 1, self.n_hours)])


def step_ev(
    state: EvState, hour: int, schedule: DriveSchedule, params: EvParams,
    rng: Optional[np.random.Generator] = None,
) -> tuple[EvState, float]:
    """Advance ``state`` through one hour; returns the state and the charge in kW."""
    events = schedule.events.get(hour)
    if events:
        for kind, value in events:
            if kind == DEPART:
                state.mode = Mode.DRIVING
                state.charge_state = None
            elif kind == DRIVE:
                used = min(value, state.soc)
                state.unserved_kwh += value - used
                state.consumed_kwh += used
                state.soc -= used
            else:
                plug = connection_decision(state, params, rng)
                if plug:
                    state.mode = Mode.PARKED_CONNECTED
                    state.charge_state = _charge_state(
                        state.soc, state.capacity, schedule.need_after(hour))
                else:
                    state.mode = Mode.PARKED_DISCONNECTED
                    state.charge_state = None
        return state, 0.0
    charge = 0.0
    if state.mode == Mode.PARKED_CONNECTED:
        if state.soc < state.capacity - EPS:
            charge = min(params.station_power, state.capacity - state.soc)
            state.soc = min(state.soc + charge, state.capacity)
        state.charge_state = _charge_state(state.soc, state.capacity, schedule.need_after(hour))
    return state, charge


def tile_week(
    tours: Sequence[Tour], year: int, consumption: float
) -> list[tuple[int, int, float]]:
    """Repeat a weekly tour template over a calendar year.

    Returns ``(departure_min, arrival_min, energy_kwh)`` relative to January
    1st 00:00. Copies not fully inside the year are dropped.
    """
    start = datetime(year, 1, 1)
    horizon = year_hours(year) * 60
    if not tours:
        return []
    dep = np.array([t.departure for t in tours], dtype=np.int64)
    arr = np.array([t.arrival for t in tours], dtype=np.int64)
    energy = np.array([tour_energy(t.total_distance, consumption) for t in tours])
    n_weeks = horizon // MINUTES_PER_WEEK + 2
    shifts = -start.weekday() * MINUTES_PER_DAY + np.arange(n_weeks) * MINUTES_PER_WEEK
    deps = (shifts[:, None] + dep[None, :]).ravel()
    arrs = (shifts[:, None] + arr[None, :]).ravel()
    energies = np.broadcast_to(energy, (n_weeks, len(tours))).ravel()
    keep = (deps >= 0) & (arrs <= horizon)
    out = list(zip(deps[keep].tolist(), arrs[keep].tolist(), energies[keep].tolist()))
    out.sort()
    return out


def _parked_stretch(state: EvState, out: np.ndarray, power: float) -> None:
    """Write the charge drawn over parked hours without tour events into ``out``."""
    if state.mode != Mode.PARKED_CONNECTED or state.soc >= state.capacity - EPS:
        return
    length = len(out)
    deficit = state.capacity - state.soc
    full = int(deficit // power)
    out[:min(full, length)] = power
    total = min(full, length) * power
    if full < length:
        rest = deficit - full * power
        if rest > EPS:
            out[full] = rest
            total += rest
    state.soc = state.capacity if total >= deficit - EPS else state.soc + total


def run_schedule(
    schedule: DriveSchedule, params: EvParams, capacity: float, plug_interval: int,
    start: datetime, trace: bool = False,
) -> EvResult:
    """Run the state machine over a compiled schedule.

    Gives the same result as calling :func:`step_ev` hour by hour, but
    advances one tour and one parked stretch at a time.
    """
    state = EvState(capacity=capacity, soc=capacity, plug_interval=plug_interval)
    n = schedule.n_hours
    charge = np.zeros(n)
    if trace:
        modes = np.zeros(n, dtype=np.int8)
        socs = np.zeros(n)
        arrivals = []
    h = 0
    for k in range(len(schedule.tours) + 1):
        busy = schedule.first[k] if k < len(schedule.tours) else n
        if busy > h:
            soc0 = state.soc
            _parked_stretch(state, charge[h:busy], params.station_power)
            if state.mode == Mode.PARKED_CONNECTED:
                state.charge_state = _charge_state(state.soc, capacity, schedule.need_after(busy - 1))
            if trace:
                modes[h:busy] = state.mode
                socs[h:busy] = np.minimum(soc0 + np.cumsum(charge[h:busy]), capacity)
        if k == len(schedule.tours):
            break
        state.mode = Mode.DRIVING
        state.charge_state = None
        need = schedule.needs[k]
        if need <= state.soc:
            if trace:
                path = state.soc - np.cumsum(schedule.shares(k))
            state.soc -= need
            state.consumed_kwh += need
        else:
            # battery runs empty during the tour
            path = np.maximum(state.soc - np.cumsum(schedule.shares(k)), 0.0)
            state.consumed_kwh += state.soc
            state.unserved_kwh += need - state.soc
            state.soc = 0.0
        last = schedule.last[k]
        plug = connection_decision(state, params)
        if plug:
            state.mode = Mode.PARKED_CONNECTED
            state.charge_state = _charge_state(state.soc, capacity, schedule.need_after(last))
        else:
            state.mode = Mode.PARKED_DISCONNECTED
        if trace:
            modes[busy:last + 1] = Mode.DRIVING
            socs[busy:last + 1] = np.maximum(path, 0.0)
            socs[last] = state.soc
            arrivals.append((last, state.soc / capacity, int(state.mode)))
        h = last + 1
    result = EvResult(
        charging_series=TimeSeries(start, charge),
        unserved_km=state.unserved_kwh / params.consumption,
        plug_in_events=state.plug_in_events,
        forced_plug_ins=state.forced_plug_ins,
        consumed_kwh=state.consumed_kwh,
        start_soc=capacity,
        end_soc=state.soc,
        plug_interval=plug_interval,
    )
    if trace:
        result.trace = {"mode": modes, "soc": socs, "arrivals": arrivals}
    return result


def run_hourly(
    schedule: DriveSchedule, params: EvParams, capacity: float, plug_interval: int,
    start: datetime,
) -> EvResult:
    """Reference run calling :func:`step_ev` for every hour."""
    state = EvState(capacity=capacity, soc=capacity, plug_interval=plug_interval)
    charge = np.zeros(schedule.n_hours)
    for hour in range(schedule.n_hours):
        state, charge[hour] = step_ev(state, hour, schedule, params)
    return EvResult(
        charging_series=TimeSeries(start, charge),
        unserved_km=state.unserved_kwh / params.consumption,
        plug_in_events=state.plug_in_events,
        forced_plug_ins=state.forced_plug_ins,
        consumed_kwh=state.consumed_kwh,
        start_soc=capacity,
        end_soc=state.soc,
        plug_interval=plug_interval,
    )


def simulate_ev(
    vehicle: Vehicle, params: EvParams, year: int, rng: np.random.Generator, trace: bool = False,
) -> EvResult:
    """Simulate one vehicle's weekly tours over a calendar year.

    The battery starts full; the plug-in interval is drawn from ``rng``.
    """
    capacity = vehicle.battery_capacity or params.battery_capacity
    plug_interval = params.sample_plug_interval(rng)
    n = year_hours(year)
    schedule = DriveSchedule(tile_week(vehicle.tours, year, params.consumption), n)
    return run_schedule(schedule, params, capacity, plug_interval, datetime(year, 1, 1), trace)
