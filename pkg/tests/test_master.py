import csv
import json
from dataclasses import replace
from datetime import date, datetime

import numpy as np
import pytest

from occusim.config import FileParams
from occusim.errors import DataError, FileUnreadable, WriteFailed
from occusim.experiment import run_window
from occusim.master import dump_summary, load_inputs, write_report


@pytest.fixture
def window(study_config):
    inputs = load_inputs(study_config())
    result, report, _ = run_window(inputs, 10.0)
    return result, report


def test_inputs_cover_window_plus_horizon(study_config):
    cfg = study_config()
    inputs = load_inputs(cfg)
    assert inputs.weather.start == cfg.start
    assert inputs.weather.stop >= cfg.stop
    assert inputs.days[0] == date(2015, 1, 1) and len(inputs.days) == 21
    assert len(inputs.matrices) == cfg.rooms
    assert [s.day for s in inputs.strings_for(date(2015, 1, 9))] == [date(2015, 1, 9)] * 2
    with pytest.raises(DataError):
        inputs.strings_for(date(2016, 1, 1))


def test_missing_data_file_names_the_path(study_config, tmp_path):
    cfg = study_config()
    gone = str(tmp_path / "nope.csv")
    with pytest.raises(FileUnreadable) as info:
        load_inputs(replace(cfg, files=replace(cfg.files, weather=gone)))
    assert gone in str(info.value)
    with pytest.raises(DataError):
        load_inputs(replace(cfg, files=FileParams(None, None, None)))


def test_step_file_layout(window, tmp_path):
    result, report = window
    steps, summary = write_report(result, report, tmp_path / "run")
    with open(steps, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 145
    header = rows[0]
    assert header[:5] == ["step", "timestamp", "outdoor_temperature", "supply_air_temperature", "power_kw"]
    assert len(header) == 5 + 6 * 2 and all(len(r) == len(header) for r in rows)
    assert rows[1][1] == "20150115T0000" and rows[-1][1] == "20150115T2350"
    temps = np.array([[float(r[header.index(f"temperature_{j}")]) for j in (1, 2)] for r in rows[1:]])
    assert np.array_equal(temps, result.temperatures)

    data = json.loads(summary.read_text())
    assert data["n_steps"] == 144 and data["rooms"] == 2
    assert data["energy_kwh"] == report.energy
    assert datetime.fromisoformat(data["start"]) == result.start


def test_write_is_byte_identical(window, tmp_path):
    result, report = window
    a = write_report(result, report, tmp_path / "a", {"seed": 1})
    b = write_report(result, report, tmp_path / "b", {"seed": 1})
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_unwritable_destination(window, tmp_path):
    result, report = window
    with pytest.raises(WriteFailed):
        write_report(result, report, tmp_path / "missing_dir" / "run")
    with pytest.raises(WriteFailed):
        dump_summary(tmp_path, {"a": 1})


def test_summary_json_is_strict(tmp_path):
    path = tmp_path / "s.json"
    dump_summary(path, {"nan": float("nan"), "arr": np.arange(3), "n": np.int64(4), "d": date(2015, 1, 2)})
    assert json.loads(path.read_text()) == {"nan": None, "arr": [0, 1, 2], "n": 4, "d": "2015-01-02"}
