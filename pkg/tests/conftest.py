import pytest

from evtwin.der import PvParams
from evtwin.mobility import ModeChoiceTable
from evtwin.pipeline import build_town
from evtwin.population import SynthesisConfig
from evtwin.scenarios import SimulationSettings
from evtwin.synthtown import SyntheticTownSpec, generate_synthetic_town


def make_town(n_buildings: int, seed: int):
    bundle = generate_synthetic_town(SyntheticTownSpec(n_buildings=n_buildings), seed)
    cfg = SynthesisConfig(census_flat_total=bundle.census_flat_total,
                          total_vehicles_target=bundle.total_vehicles_target, rng_seed=seed)
    town, pop, diag = build_town(bundle.buildings, bundle.diaries, cfg, ModeChoiceTable.default(),
                                 seed, bundle.year, bundle.examples)
    settings = SimulationSettings(pv=PvParams(profile_library=bundle.pv_profiles))
    return bundle, town, pop, settings


@pytest.fixture(scope="session")
def small_town():
    return make_town(40, 3)


# ---------------------------------------------------------------- acceptance summary

_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, [title, "PASS"])
    if rep.failed:
        entry[1] = "FAIL"
    elif rep.skipped and entry[1] == "PASS":
        entry[1] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
