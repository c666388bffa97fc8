"""Run configuration: one YAML file with a section per subsystem."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .ev import EvParams
from .mobility import ModeChoiceTable
from .model import FamilyType
from .population import SynthesisConfig
from .scenarios import ALL_SCENARIOS, BessSettings, Scenario
from .synthtown import SyntheticTownSpec


class ConfigError(ValueError):
    def __init__(self, field_path: str, message: str, line: Optional[int] = None):
        self.field_path = field_path
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field_path}{where}: {message}")


DATA_KEYS = ("buildings", "demand", "pv_profiles", "trip_diaries", "training_examples")


@dataclass
class DataPaths:
    buildings: Optional[Path] = None
    demand: Optional[Path] = None
    pv_profiles: Optional[Path] = None
    trip_diaries: Optional[Path] = None
    training_examples: Optional[Path] = None

    @property
    def synthetic(self) -> bool:
        return self.buildings is None


@dataclass
class TreeSettings:
    max_depth: int = 5
    min_leaf: int = 1


@dataclass
class PvSettings:
    density: float = 0.172
    cap: float = 30.0


@dataclass
class RunConfig:
    seed: int = 0
    year: int = 2021
    output_dir: Path = Path("out")
    data: DataPaths = field(default_factory=DataPaths)
    synthetic_town: SyntheticTownSpec = field(default_factory=SyntheticTownSpec)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    tree: TreeSettings = field(default_factory=TreeSettings)
    mode_choice: ModeChoiceTable = field(default_factory=ModeChoiceTable.default)
    use_default_mode_choice: bool = False
    ev: EvParams = field(default_factory=EvParams)
    capacity_overrides: dict = field(default_factory=dict)
    pv: PvSettings = field(default_factory=PvSettings)
    bess: BessSettings = field(default_factory=BessSettings)
    scenarios: list = field(default_factory=lambda: list(ALL_SCENARIOS))

    def to_dict(self, include_output: bool = True) -> dict:
        """Fully resolved configuration, defaults included."""
        syn = self.synthesis
        out = {
            "seed": self.seed,
            "year": self.year,
            "data": {k: (str(getattr(self.data, k)) if getattr(self.data, k) else None) for k in DATA_KEYS},
            "synthetic_town": _plain(asdict(self.synthetic_town)),
            "synthesis": {
                "family_type_frequencies": list(syn.family_type_frequencies),
                "members_by_family_type": {
                    ft.value: dict(v) for ft, v in syn.members_by_family_type.items()},
                "adult_child_share": syn.adult_child_share,
                "vehicles_per_adult_count": {k: dict(v) for k, v in syn.vehicles_per_adult_count.items()},
                "census_flat_total": syn.census_flat_total,
                "total_vehicles_target": syn.total_vehicles_target,
                "residential_meter_fraction": syn.residential_meter_fraction,
                "rng_seed": syn.rng_seed,
                "tree": asdict(self.tree),
            },
            "mobility": {
                "use_default_mode_choice": self.use_default_mode_choice,
                "mode_choice": self.mode_choice.to_dict(),
            },
            "ev": {
                "battery_capacity": self.ev.battery_capacity,
                "consumption": self.ev.consumption,
                "station_power": self.ev.station_power,
                "connect_threshold_soc": self.ev.connect_threshold_soc,
                "connection_model": dict(self.ev.connection_model),
                "capacity_overrides": dict(self.capacity_overrides),
            },
            "pv": asdict(self.pv),
            "bess": asdict(self.bess),
            "scenarios": [Scenario(s).value for s in self.scenarios],
        }
        if include_output:
            out["output_dir"] = str(self.output_dir)
        return _plain(out)

    def config_hash(self) -> str:
        """Digest of everything that affects results (the output path does not)."""
        blob = json.dumps(self.to_dict(include_output=False), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return obj.item()
    return obj


class _Lines:
    """Line numbers of YAML keys, addressed by dotted path."""

    def __init__(self, text: str):
        try:
            self.root = yaml.compose(text)
        except yaml.YAMLError:
            self.root = None

    def line(self, path: str) -> Optional[int]:
        node = self.root
        best = None
        for part in path.split("."):
            if not isinstance(node, yaml.MappingNode):
                break
            for key, value in node.value:
                if str(key.value) == part:
                    best = key.start_mark.line + 1
                    node = value
                    break
            else:
                break
        return best


def _section(raw: dict, name: str, lines: _Lines) -> dict:
    sec = raw.get(name)
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be a mapping", lines.line(name))
    return sec


def _build(cls, kwargs: dict, path: str, lines: _Lines, allowed=None):
    allowed = set(allowed) if allowed is not None else {f.name for f in fields(cls)}
    for key in kwargs:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown field", lines.line(f"{path}.{key}"))
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        field_name = next((k for k in kwargs if k in str(exc)), None)
        sub = f"{path}.{field_name}" if field_name else path
        raise ConfigError(sub, str(exc), lines.line(sub)) from None


TOP_LEVEL = {"seed", "year", "output_dir", "data", "synthetic_town", "synthesis",
             "mobility", "ev", "pv", "bess", "scenarios"}


def parse_config(text: str, base_dir: Path = Path("."), check_paths: bool = True) -> RunConfig:
    lines = _Lines(text)
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<file>", f"invalid YAML: {exc}", mark.line + 1 if mark else None) from None
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "top level must be a mapping", 1)
    for key in raw:
        if key not in TOP_LEVEL:
            raise ConfigError(str(key), "unknown field", lines.line(str(key)))

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer", lines.line("seed"))
    year = raw.get("year", 2021)
    if not isinstance(year, int) or year < 1900:
        raise ConfigError("year", "must be a calendar year", lines.line("year"))

    data_raw = _section(raw, "data", lines)
    for key in data_raw:
        if key not in DATA_KEYS:
            raise ConfigError(f"data.{key}", "unknown field", lines.line(f"data.{key}"))
    data = DataPaths(**{k: (base_dir / v).resolve() for k, v in data_raw.items() if v is not None})
    if not data.synthetic:
        for key in ("demand", "pv_profiles", "trip_diaries"):
            if getattr(data, key) is None:
                raise ConfigError(f"data.{key}", "required when data.buildings is given",
                                  lines.line("data"))
    if check_paths:
        for key in DATA_KEYS:
            p = getattr(data, key)
            if p is not None and not p.exists():
                raise ConfigError(f"data.{key}", f"file not found: {p}", lines.line(f"data.{key}"))

    town_raw = dict(_section(raw, "synthetic_town", lines))
    for key in ("tower_flats", "roof_area_m2", "annual_kwh_per_flat"):
        if key in town_raw:
            town_raw[key] = tuple(town_raw[key])
    town_raw.setdefault("year", year)
    town = _build(SyntheticTownSpec, town_raw, "synthetic_town", lines)

    syn_raw = dict(_section(raw, "synthesis", lines))
    tree_raw = syn_raw.pop("tree", None) or {}
    if "members_by_family_type" in syn_raw:
        try:
            syn_raw["members_by_family_type"] = {
                FamilyType(k): v for k, v in syn_raw["members_by_family_type"].items()}
        except ValueError as exc:
            raise ConfigError("synthesis.members_by_family_type", str(exc),
                              lines.line("synthesis.members_by_family_type")) from None
    syn_raw.setdefault("rng_seed", seed)
    synthesis = _build(SynthesisConfig, syn_raw, "synthesis", lines)
    tree = _build(TreeSettings, tree_raw, "synthesis.tree", lines)

    mob_raw = _section(raw, "mobility", lines)
    for key in mob_raw:
        if key not in ("mode_choice", "use_default_mode_choice"):
            raise ConfigError(f"mobility.{key}", "unknown field", lines.line(f"mobility.{key}"))
    use_default = bool(mob_raw.get("use_default_mode_choice", False))
    if mob_raw.get("mode_choice") is not None:
        table = _build(ModeChoiceTable, dict(mob_raw["mode_choice"]), "mobility.mode_choice", lines)
    elif use_default:
        table = ModeChoiceTable.default()
    else:
        raise ConfigError("mobility.mode_choice",
                          "missing; give a table or set mobility.use_default_mode_choice: true",
                          lines.line("mobility"))

    ev_raw = dict(_section(raw, "ev", lines))
    overrides = ev_raw.pop("capacity_overrides", None) or {}
    ev = _build(EvParams, ev_raw, "ev", lines)
    for vid, cap in overrides.items():
        if not isinstance(cap, (int, float)) or cap <= 0:
            raise ConfigError(f"ev.capacity_overrides.{vid}", "capacity must be > 0",
                              lines.line(f"ev.capacity_overrides.{vid}"))
    pv = _build(PvSettings, _section(raw, "pv", lines), "pv", lines)
    if pv.density <= 0 or pv.cap < 0:
        raise ConfigError("pv", "density must be > 0 and cap >= 0", lines.line("pv"))
    bess = _build(BessSettings, _section(raw, "bess", lines), "bess", lines)
    if not 0 < bess.round_trip_efficiency <= 1 or bess.max_capacity < 0 or bess.c_rate <= 0:
        raise ConfigError("bess", "invalid battery settings", lines.line("bess"))

    scen_raw = raw.get("scenarios", [s.value for s in ALL_SCENARIOS])
    try:
        scenarios = [Scenario(s) for s in scen_raw]
    except ValueError as exc:
        raise ConfigError("scenarios", str(exc), lines.line("scenarios")) from None

    return RunConfig(
        seed=seed, year=year,
        output_dir=(base_dir / raw.get("output_dir", "out")).resolve(),
        data=data, synthetic_town=town, synthesis=synthesis, tree=tree,
        mode_choice=table, use_default_mode_choice=use_default,
        ev=ev, capacity_overrides={str(k): float(v) for k, v in overrides.items()},
        pv=pv, bess=bess, scenarios=scenarios,
    )


def load_config(path, check_paths: bool = True) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent, check_paths)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))


def config_with(cfg: RunConfig, **changes: Any) -> RunConfig:
    """Copy of ``cfg`` with top-level fields replaced."""
    return replace(cfg, **changes)
