"""Readers and writers for the on-disk formats.

Buildings CSV
    ``id, roof_area_m2, orientation, volume_m3, meter_count, has_pv, has_hp``
    and an optional ``has_ev`` column.
Demand CSV
    Wide: header row of building ids, one row per hour of the year (kW).
    An optional leading ``timestamp`` column is ignored.
PV-profile CSV
    Wide: header row of orientation labels, one row per hour (kW per kWp).
Trip-diary JSON
    ``[{"id": ..., "trips": [{"day": 0-6, "dep": "HH:MM", "arr": "HH:MM",
    "km": float, "from_home": bool, "to_home": bool}]}]``; an arrival
    earlier than the departure falls on the next day.
Training-examples CSV
    ``meter_count, volume_m3, has_pv, has_hp, label``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import replace
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .mobility import TripDiary
from .model import MINUTES_PER_DAY, Building, Orientation, Trip, hhmm, weekday_of
from .population.tree import LabeledBuildingExample
from .timeseries import TimeSeries, year_hours

BUILDING_COLUMNS = ("id", "roof_area_m2", "orientation", "volume_m3", "meter_count", "has_pv", "has_hp")


class DataError(ValueError):
    pass


class JoinError(DataError):
    def __init__(self, missing: Sequence[str]):
        self.missing = list(missing)
        super().__init__(f"no demand series for building ids: {', '.join(self.missing)}")


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


def _bool(value, where: str) -> bool:
    v = str(value).strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise DataError(f"{where}: not a boolean: {value!r}")


def _float(value, where: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise DataError(f"{where}: not a number: {value!r}") from None
    if not np.isfinite(x):
        raise DataError(f"{where}: not finite: {value!r}")
    return x


def _data_text(path) -> io.StringIO:
    """File contents without the leading ``#`` provenance lines."""
    lines = Path(path).read_text().splitlines(keepends=True)
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        k += 1
    buf = io.StringIO("".join(lines[k:]))
    buf.skipped = k
    return buf


def _meta_lines(fh, meta: Optional[Mapping]) -> None:
    for k, v in (meta or {}).items():
        fh.write(f"# {k}={v}\n")


# ---------------------------------------------------------------- series

def read_wide_series(path, year: int, what: str = "series") -> dict[str, TimeSeries]:
    text = _data_text(path)
    df = pd.read_csv(text, dtype=str, keep_default_na=False)
    if df.columns[0].lower() == "timestamp":
        df = df.drop(columns=df.columns[0])
    n = year_hours(year)
    if len(df) != n:
        raise DataError(f"{path}: expected {n} hourly rows for {year}, found {len(df)}")
    start = datetime(year, 1, 1)
    out = {}
    for col in df.columns:
        vals = pd.to_numeric(df[col].str.strip().replace("", "nan"), errors="coerce").to_numpy(float)
        bad = np.flatnonzero(~np.isfinite(vals) | (vals < 0))
        if bad.size:
            rows = ", ".join(str(i + 2 + text.skipped) for i in bad[:5])
            raise DataError(f"{path}: {what} '{col}' has NaN or negative values at rows {rows}")
        out[str(col)] = TimeSeries(start, vals)
    return out


def write_wide_series(series: Mapping[str, TimeSeries], path, meta: Optional[Mapping] = None) -> None:
    df = pd.DataFrame({str(k): s.values for k, s in series.items()})
    with Path(path).open("w", newline="") as fh:
        _meta_lines(fh, meta)
        df.to_csv(fh, index=False, float_format="%.6f")


def read_demand_csv(path, year: int) -> dict[str, TimeSeries]:
    return read_wide_series(path, year, "demand of building")


def read_pv_profiles_csv(path, year: int) -> dict[Orientation, TimeSeries]:
    raw = read_wide_series(path, year, "PV profile")
    try:
        return {Orientation(k): v for k, v in raw.items()}
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_pv_profiles_csv(library: Mapping[Orientation, TimeSeries], path, meta: Optional[Mapping] = None) -> None:
    write_wide_series({Orientation(k).value: v for k, v in library.items()}, path, meta)


# ---------------------------------------------------------------- buildings

def ingest_buildings(path, demand: Optional[Mapping[str, TimeSeries]] = None) -> list[Building]:
    """Validated buildings, joined with their demand series when given."""
    path = Path(path)
    text = _data_text(path)
    with text as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in BUILDING_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        buildings = []
        for i, row in enumerate(reader, start=2 + text.skipped):
            where = f"{path}:{i}"
            try:
                meter_count = int(row["meter_count"])
            except ValueError:
                raise DataError(f"{where}: meter_count is not an integer") from None
            roof = _float(row["roof_area_m2"], where)
            if roof < 0:
                raise DataError(f"{where}: negative roof area {roof}")
            try:
                b = Building(
                    id=row["id"].strip(),
                    roof_area=roof,
                    roof_orientation=Orientation(row["orientation"].strip()),
                    volume=_float(row["volume_m3"], where),
                    meter_count=meter_count,
                    has_pv=_bool(row["has_pv"], where),
                    has_heat_pump=_bool(row["has_hp"], where),
                    has_ev=_bool(row.get("has_ev", "") or "", where),
                )
            except ValueError as exc:
                raise DataError(f"{where}: {exc}") from None
            buildings.append(b)
    ids = [b.id for b in buildings]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate building ids")
    if demand is not None:
        lost = [bid for bid in ids if bid not in demand]
        if lost:
            raise JoinError(lost)
        buildings = [_with_demand(b, demand[b.id]) for b in buildings]
    return buildings


def _with_demand(b: Building, s: TimeSeries) -> Building:
    return replace(b, demand=s)


def write_buildings_csv(buildings: Iterable[Building], path, meta: Optional[Mapping] = None) -> None:
    with Path(path).open("w", newline="") as fh:
        _meta_lines(fh, meta)
        w = csv.writer(fh)
        w.writerow([*BUILDING_COLUMNS, "has_ev"])
        for b in buildings:
            w.writerow([b.id, b.roof_area, b.roof_orientation.value, b.volume, b.meter_count,
                        int(b.has_pv), int(b.has_heat_pump), int(b.has_ev)])


# ---------------------------------------------------------------- examples

def read_examples_csv(path) -> list[LabeledBuildingExample]:
    out = []
    text = _data_text(path)
    with text as fh:
        for i, row in enumerate(csv.DictReader(fh), start=2 + text.skipped):
            where = f"{path}:{i}"
            try:
                out.append(LabeledBuildingExample(
                    meter_count=int(row["meter_count"]),
                    volume=_float(row["volume_m3"], where),
                    has_pv=_bool(row["has_pv"], where),
                    has_heat_pump=_bool(row["has_hp"], where),
                    label=row["label"].strip(),
                ))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{where}: {exc}") from None
    return out


def write_examples_csv(examples: Iterable[LabeledBuildingExample], path, meta: Optional[Mapping] = None) -> None:
    with Path(path).open("w", newline="") as fh:
        _meta_lines(fh, meta)
        w = csv.writer(fh)
        w.writerow(["meter_count", "volume_m3", "has_pv", "has_hp", "label"])
        for e in examples:
            w.writerow([e.meter_count, e.volume, int(e.has_pv), int(e.has_heat_pump), e.label.value])


# ---------------------------------------------------------------- diaries

def _minutes(text: str, where: str) -> int:
    try:
        h, m = str(text).split(":")
        h, m = int(h), int(m)
    except ValueError:
        raise DataError(f"{where}: bad time {text!r}, expected HH:MM") from None
    if not (0 <= h < 24 and 0 <= m < 60):
        raise DataError(f"{where}: time out of range {text!r}")
    return h * 60 + m


def parse_trip(obj: Mapping, where: str) -> Trip:
    try:
        day = int(obj["day"])
        if not 0 <= day <= 6:
            raise DataError(f"{where}: day must be 0-6")
        dep = day * MINUTES_PER_DAY + _minutes(obj["dep"], where)
        arr = day * MINUTES_PER_DAY + _minutes(obj["arr"], where)
        if arr < dep:
            arr += MINUTES_PER_DAY
        return Trip(dep, arr, float(obj["km"]), bool(obj["from_home"]), bool(obj["to_home"]))
    except KeyError as exc:
        raise DataError(f"{where}: missing key {exc}") from None


def read_trip_diaries(path) -> list[TripDiary]:
    with Path(path).open() as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise DataError(f"{path}: expected a JSON array of persons")
    diaries = []
    for i, person in enumerate(data):
        pid = str(person.get("id", i))
        trips = [parse_trip(t, f"{path}: person {pid} trip {j}") for j, t in enumerate(person.get("trips", []))]
        trips.sort(key=lambda t: (t.departure, t.arrival))
        diaries.append(TripDiary(pid, trips))
    return diaries


def trip_to_json(t: Trip) -> dict:
    return {
        "day": weekday_of(t.departure),
        "dep": hhmm(t.departure),
        "arr": hhmm(t.arrival),
        "km": t.distance,
        "from_home": t.origin_is_home,
        "to_home": t.destination_is_home,
    }


def write_trip_diaries(diaries: Iterable[TripDiary], path) -> None:
    data = [{"id": d.person_id, "trips": [trip_to_json(t) for t in d.trips]} for d in diaries]
    Path(path).write_text(json.dumps(data, indent=1))


# ---------------------------------------------------------------- artifacts

def write_json(obj, path, meta: Optional[Mapping] = None) -> None:
    payload = {"meta": dict(meta)} if meta else {}
    payload.update(obj)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_csv(rows: Sequence[Mapping], path, meta: Optional[Mapping] = None,
              fieldnames: Optional[Sequence[str]] = None) -> None:
    """Plain CSV preceded by ``# key=value`` provenance comment lines.

    The header is written even when ``rows`` is empty if ``fieldnames`` is given.
    """
    with Path(path).open("w", newline="") as fh:
        _meta_lines(fh, meta)
        fieldnames = list(fieldnames) if fieldnames is not None else (list(rows[0]) if rows else None)
        if fieldnames is None:
            return
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
