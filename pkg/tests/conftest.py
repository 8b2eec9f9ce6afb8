from datetime import date
from pathlib import Path

import pytest

from occusim import synthetic
from occusim.config import load_config


@pytest.fixture(scope="session")
def small_study(tmp_path_factory) -> Path:
    """Two rooms, 21 days of history; returns the data directory."""
    d = tmp_path_factory.mktemp("small_study")
    synthetic.write_fixture(d, date(2015, 1, 1), 21, rooms=2, seed=7)
    return d


def write_config(directory: Path, name="study.cfg", control=2, start="20150115T0000",
                 stop="20150116T0000", extra="") -> Path:
    path = Path(directory) / name
    path.write_text(
        "building: {\n"
        f"  rooms: 2, start: {start}, stop: {stop}, control: {control}, horizon: 1,\n"
        "  files: { weather: weather.csv, occupancy: occupancy.csv, output: out/study },\n"
        f"  {extra}\n"
        "}\n"
    )
    return path


@pytest.fixture
def study_config(small_study):
    def make(**kw):
        return load_config(write_config(small_study, **kw))
    return make


# -- acceptance verdicts ---------------------------------------------------------

VERDICTS = pytest.StashKey[dict]()
CRITERIA = {
    "1": "analyser unit examples",
    "2": "error-matrix properties",
    "3": "thermal model checks",
    "4": "MPC equals exhaustive enumeration",
    "5": "zero-error determinism",
    "6a": "desk trend: spread(20%) >= spread(5%)",
    "6b": "desk trend: robust(20%) <= robust(5%)",
    "6t": "desk target: robust strictly decreasing on >= 5 of 7 days",
    "6r": "desk runtime < 300 s single-threaded",
    "7": "example config, round trip, byte-identical reruns",
}


@pytest.fixture
def verdict(request):
    """Record and assert one acceptance criterion."""
    store = request.config.stash.setdefault(VERDICTS, {})

    def record(key: str, ok: bool, detail: str = "") -> None:
        store[key] = (bool(ok), detail)
        assert ok, f"criterion {key} ({CRITERIA[key]}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(VERDICTS, None)
    if store is None:
        return
    terminalreporter.section("acceptance criteria")
    for key, name in CRITERIA.items():
        if key not in store:
            terminalreporter.write_line(f"----  [{key}] {name}  (not evaluated in this run)")
            continue
        ok, detail = store[key]
        line = f"{'PASS' if ok else 'FAIL'}  [{key}] {name}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
