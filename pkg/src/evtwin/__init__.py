"""Digital twin of a town's residential loads with EVs, rooftop PV and batteries."""
from .config import ConfigError, RunConfig, load_config, save_config
from .der import BessParams, PvParams, simulate_building, size_bess, size_pv
from .ev import EvParams, EvResult, simulate_ev
from .mobility import ModeChoiceTable, TripDiary, build_tours, sample_vehicle_tours
from .model import Building, BuildingType, FamilyType, Household, Orientation, Tour, Trip, Vehicle
from .pipeline import build_town, synthesize_population
from .scenarios import Scenario, ScenarioReport, SimulationSettings, Town, mobility_validation, run_scenario, run_scenarios
from .synthtown import SyntheticTownSpec, generate_synthetic_town
from .timeseries import TimeSeries

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "save_config",
    "BessParams",
    "PvParams",
    "simulate_building",
    "size_bess",
    "size_pv",
    "EvParams",
    "EvResult",
    "simulate_ev",
    "ModeChoiceTable",
    "TripDiary",
    "build_tours",
    "sample_vehicle_tours",
    "Building",
    "BuildingType",
    "FamilyType",
    "Household",
    "Orientation",
    "Tour",
    "Trip",
    "Vehicle",
    "build_town",
    "synthesize_population",
    "Scenario",
    "ScenarioReport",
    "SimulationSettings",
    "Town",
    "mobility_validation",
    "run_scenario",
    "run_scenarios",
    "SyntheticTownSpec",
    "generate_synthetic_town",
    "TimeSeries",
]
