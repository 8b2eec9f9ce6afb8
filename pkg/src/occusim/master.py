"""Input assembly and output files for a configured study."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from pathlib import Path

import numpy as np

from .analyser import AnalysisReport
from .config import TIMESTAMP_FORMAT, SimulationConfig
from .engine import SimulationResult
from .errorlab import ErrorMatrix, OccupancyString, build_error_matrix, to_day_strings
from .errors import DataError, FileUnreadable, WriteFailed
from .series import (
    OCCUPANCY,
    TEMPERATURE,
    TimeSeries,
    load_csv_series,
    load_occupancy,
    preprocess,
    slice_window,
)


def _midnight_on_or_after(ts: datetime) -> datetime:
    day = datetime.combine(ts.date(), time())
    return day if day == ts else day + timedelta(days=1)


@dataclass(frozen=True, eq=False)
class StudyInputs:
    """Preprocessed weather plus the per-room occupancy history and error matrices."""

    config: SimulationConfig
    weather: TimeSeries  # from config.start, runs one horizon past config.stop
    day_strings: tuple[tuple[OccupancyString, ...], ...]  # [room][day]
    matrices: tuple[ErrorMatrix, ...]  # one per room

    @property
    def days(self) -> list[date]:
        return [s.day for s in self.day_strings[0]]

    def strings_for(self, day: date) -> list[OccupancyString]:
        out = []
        for room in self.day_strings:
            match = [s for s in room if s.day == day]
            if not match:
                raise DataError(f"no occupancy data for {day}")
            out.append(match[0])
        return out

    def weather_from(self, start: datetime, stop: datetime) -> TimeSeries:
        """Weather from ``start`` to ``stop`` plus one forecast horizon."""
        extra = timedelta(hours=self.config.horizon)
        end = min(stop + extra, self.weather.stop)
        return slice_window(self.weather, start, end)


def load_weather(cfg: SimulationConfig, path=None) -> TimeSeries:
    raw = load_csv_series(path or cfg.files.weather)
    window = slice_window(raw, cfg.start, cfg.stop + timedelta(hours=cfg.horizon))
    return preprocess(window, cfg.time_step, TEMPERATURE)


def load_occupancy_history(cfg: SimulationConfig, path=None) -> list[TimeSeries]:
    """Per-room occupancy at the simulation step, trimmed to whole days."""
    out = []
    for raw in load_occupancy(path or cfg.files.occupancy, cfg.rooms):
        first = _midnight_on_or_after(raw.start)
        last = datetime.combine(raw.stop.date(), time())
        if last <= first:
            raise DataError("occupancy data does not cover a whole day")
        out.append(preprocess(slice_window(raw, first, last), cfg.time_step, OCCUPANCY))
    return out


def load_inputs(cfg: SimulationConfig) -> StudyInputs:
    if not cfg.files.weather or not cfg.files.occupancy:
        raise DataError("config must name files.weather and files.occupancy")
    for name in (cfg.files.weather, cfg.files.occupancy):
        if not Path(name).is_file():
            raise FileUnreadable(name, "no such file")
    weather = load_weather(cfg)
    history = load_occupancy_history(cfg)
    strings = tuple(tuple(to_day_strings(s)) for s in history)
    matrices = tuple(build_error_matrix(s) for s in strings)
    return StudyInputs(cfg, weather, strings, matrices)


# --------------------------------------------------------------------------
# Output


def _num(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    return value


def dump_summary(path, summary: dict) -> None:
    text = json.dumps(_jsonable(summary), indent=2, sort_keys=True, allow_nan=False)
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise WriteFailed(f"cannot write {path}: {exc.strerror or exc}") from None


def report_summary(report: AnalysisReport) -> dict:
    return {
        "energy_kwh": report.energy,
        "discomfort_percent": list(report.discomfort_percent),
        "mean_discomfort_percent": report.mean_discomfort_percent,
        "robust_percent": report.robust,
    }


def write_report(result: SimulationResult, report: AnalysisReport, path, extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``<path>.steps.csv`` (one row per step) and ``<path>.summary.json``."""
    base = str(path)
    steps_path, summary_path = Path(base + ".steps.csv"), Path(base + ".summary.json")
    n = result.rooms
    header = ["step", "timestamp", "outdoor_temperature", "supply_air_temperature", "power_kw"]
    for name in ("temperature", "occupancy", "forecast_occupancy", "airflow", "pmv", "discomfort"):
        header += [f"{name}_{j + 1}" for j in range(n)]
    try:
        with open(steps_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k, ts in enumerate(result.times()):
                row = [k, ts.strftime(TIMESTAMP_FORMAT), _num(result.outdoor[k]),
                       _num(result.supply_air_temperature[k]), _num(result.power[k])]
                for arr in (result.temperatures, result.occupancy, result.forecast_occupancy,
                            result.airflow, report.pmv_series, report.discomfort_series):
                    row += [_num(v) for v in arr[k]]
                w.writerow(row)
    except OSError as exc:
        raise WriteFailed(f"cannot write {steps_path}: {exc.strerror or exc}") from None

    summary = {
        "start": result.start,
        "time_step": result.step,
        "n_steps": result.n_steps,
        "rooms": n,
        **report_summary(report),
    }
    if extra:
        summary.update(extra)
    dump_summary(summary_path, summary)
    return steps_path, summary_path
