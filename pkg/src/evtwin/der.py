"""Rooftop PV and battery storage per building, with self-consumption dispatch."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .model import Orientation
from .timeseries import TimeSeries, check_aligned
from .validation import check_nonnegative, check_positive

PV_DENSITY_KWP_PER_M2 = 0.172
PV_CAP_KWP = 30.0
BESS_CAP_KWH = 20.0
ROUND_TRIP_EFFICIENCY = 0.90
BALANCE_TOL = 1e-6


class InvariantError(RuntimeError):
    """An internal physical invariant was violated."""


@dataclass
class PvParams:
    density: float = PV_DENSITY_KWP_PER_M2
    cap: float = PV_CAP_KWP
    profile_library: Mapping[Orientation, TimeSeries] = field(default_factory=dict)

    def __post_init__(self):
        check_positive(self.density, "density")
        check_nonnegative(self.cap, "cap")
        lib = {}
        for k, s in self.profile_library.items():
            if np.any(s.values < 0):
                raise ValueError(f"PV profile {k} has negative values")
            lib[Orientation(k)] = s
        self.profile_library = lib


@dataclass
class BessParams:
    """Battery state and limits; ``soc`` in kWh, powers in kW."""

    capacity: float
    power_rating: float
    charge_efficiency: float = math.sqrt(ROUND_TRIP_EFFICIENCY)
    discharge_efficiency: float = math.sqrt(ROUND_TRIP_EFFICIENCY)
    soc: float = 0.0

    def __post_init__(self):
        check_nonnegative(self.capacity, "capacity")
        check_nonnegative(self.power_rating, "power_rating")
        for name in ("charge_efficiency", "discharge_efficiency"):
            eta = getattr(self, name)
            if not 0.0 < eta <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not 0.0 <= self.soc <= self.capacity + 1e-12:
            raise ValueError("soc must lie in [0, capacity]")

    @classmethod
    def sized(cls, capacity: float, c_rate: float = 0.5,
              round_trip_efficiency: float = ROUND_TRIP_EFFICIENCY) -> "BessParams":
        eta = math.sqrt(round_trip_efficiency)
        return cls(capacity=capacity, power_rating=capacity * c_rate,
                   charge_efficiency=eta, discharge_efficiency=eta)


@dataclass
class BuildingEnergyResult:
    """Hourly power flows of one building, all in kW.

    ``battery`` is signed: positive while charging, negative while discharging.
    """

    demand: TimeSeries
    cs_demand: TimeSeries
    pv: TimeSeries
    battery: TimeSeries
    self_consumption: TimeSeries
    grid_import: TimeSeries
    feed_in: TimeSeries
    bess_final_soc: float = 0.0
    bess_initial_soc: float = 0.0

    @property
    def local_demand(self) -> np.ndarray:
        return self.demand.values + self.cs_demand.values


def size_pv(roof_area: float, params: Optional[PvParams] = None) -> float:
    """Installable PV peak power in kWp for a roof area in m^2."""
    params = params or PvParams()
    if roof_area < 0:
        raise ValueError("roof_area must be >= 0")
    return min(params.density * roof_area, params.cap)


def pv_series(kwp: float, orientation, library: Mapping[Orientation, TimeSeries]) -> TimeSeries:
    try:
        profile = library[Orientation(orientation)]
    except (KeyError, ValueError):
        raise KeyError(f"no PV profile for orientation {orientation!r}") from None
    return profile.scaled(kwp)


def size_bess(annual_demand_mwh: float, cap: float = BESS_CAP_KWH) -> float:
    """Battery capacity in kWh: one kWh per MWh of annual demand, capped."""
    if annual_demand_mwh < 0:
        raise ValueError("annual demand must be >= 0")
    return min(annual_demand_mwh, cap)


def step_bess(b: BessParams, surplus: float) -> tuple[BessParams, float]:
    """Charge from PV surplus or discharge into the deficit for one hour.

    Returns the battery with updated ``soc`` and the signed battery power:
    positive is drawn from PV, negative is delivered to the building.
    """
    if surplus > 0:
        p = min(surplus, b.power_rating, (b.capacity - b.soc) / b.charge_efficiency)
        p = max(p, 0.0)
        b.soc = min(b.soc + p * b.charge_efficiency, b.capacity)
        return b, p
    if surplus < 0:
        p = min(-surplus, b.power_rating, b.soc * b.discharge_efficiency)
        p = max(p, 0.0)
        b.soc = max(b.soc - p / b.discharge_efficiency, 0.0)
        return b, -p
    return b, 0.0


def _dispatch(b: BessParams, surplus: list[float]) -> list[float]:
    """Same rule as :func:`step_bess` applied over a whole series, inlined for speed."""
    soc, cap, rating = b.soc, b.capacity, b.power_rating
    eta_c, eta_d = b.charge_efficiency, b.discharge_efficiency
    out = [0.0] * len(surplus)
    for t, s in enumerate(surplus):
        if s > 0:
            p = min(s, rating, (cap - soc) / eta_c)
            if p > 0:
                soc = min(soc + p * eta_c, cap)
                out[t] = p
        elif s < 0:
            p = min(-s, rating, soc * eta_d)
            if p > 0:
                soc = max(soc - p / eta_d, 0.0)
                out[t] = -p
    b.soc = soc
    return out


def self_consumed(p_build, p_cs, p_pv, p_bat):
    """Self-consumed power: the smaller of local demand and local production.

    Works on scalars and arrays alike.
    """
    production = np.asarray(p_pv) - np.asarray(p_bat)
    if np.any(production < -BALANCE_TOL):
        raise InvariantError("PV minus battery charging power is negative")
    out = np.minimum(np.asarray(p_build) + np.asarray(p_cs), np.maximum(production, 0.0))
    return float(out) if out.ndim == 0 else out


def simulate_building(
    demand: TimeSeries,
    cs_demand: Optional[TimeSeries] = None,
    pv: Optional[TimeSeries] = None,
    bess: Optional[BessParams] = None,
) -> BuildingEnergyResult:
    """Hour-by-hour energy balance of one building.

    Residential and charging-station demand are served first by PV, then by
    the battery, then by the grid. ``bess`` is updated in place.
    """
    zeros = TimeSeries.zeros(demand.start, len(demand))
    cs_demand = cs_demand if cs_demand is not None else zeros
    pv = pv if pv is not None else zeros
    check_aligned(demand, cs_demand)
    check_aligned(demand, pv)
    load = demand.values + cs_demand.values
    gen = pv.values
    bat = np.zeros(len(demand))
    initial_soc = bess.soc if bess is not None else 0.0
    if bess is not None and bess.capacity > 0:
        bat[:] = _dispatch(bess, (gen - load).tolist())
    production = gen - bat
    self_cons = self_consumed(demand.values, cs_demand.values, gen, bat)
    grid = np.maximum(load - production, 0.0)
    feed = np.maximum(production - load, 0.0)
    mk = demand.with_values
    return BuildingEnergyResult(
        demand=demand, cs_demand=cs_demand, pv=pv, battery=mk(bat),
        self_consumption=mk(self_cons), grid_import=mk(grid), feed_in=mk(feed),
        bess_final_soc=bess.soc if bess is not None else 0.0,
        bess_initial_soc=initial_soc,
    )
