"""Synthetic weather and office-occupancy traces for demos and tests."""

from __future__ import annotations

from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .config import TIMESTAMP_FORMAT


def office_day(rng: np.random.Generator, step: int) -> np.ndarray:
    """One occupant's day: arrival, departure, lunch and a few short absences."""
    per_day = 86400 // step
    hours = np.arange(per_day) * step / 3600.0
    arrive = np.clip(rng.normal(8.5, 0.75), 6.5, 11.0)
    leave = np.clip(rng.normal(17.25, 1.0), arrive + 4.0, 21.0)
    bits = (hours >= arrive) & (hours < leave)
    if rng.random() < 0.75:
        lunch = rng.normal(12.5, 0.4)
        bits &= ~((hours >= lunch) & (hours < lunch + rng.uniform(0.5, 1.0)))
    for _ in range(rng.integers(0, 3)):
        t0 = rng.uniform(arrive, leave)
        bits &= ~((hours >= t0) & (hours < t0 + rng.uniform(0.3, 1.2)))
    return bits.astype(np.uint8)


def occupancy(days: int, rooms: int, step: int, seed: int) -> np.ndarray:
    """(days, rooms, steps_per_day) bits."""
    rng = np.random.default_rng(seed)
    return np.array([[office_day(rng, step) for _ in range(rooms)] for _ in range(days)])


SEASONS = {"winter": (2.0, 4.0), "summer": (24.0, 6.0)}  # (daily mean, half-swing) degC


def weather(days: int, step: int, seed: int, mean: float = 2.0, swing: float = 4.0) -> np.ndarray:
    """Outdoor temperature: daily sinusoid (peak mid-afternoon) plus AR(1) noise."""
    rng = np.random.default_rng(seed)
    n = days * 86400 // step
    hours = np.arange(n) * step / 3600.0
    base = mean + swing * np.sin(2 * np.pi * (hours - 9.0) / 24.0)
    noise = np.empty(n)
    level = 0.0
    phi = 0.98
    for k in range(n):
        level = phi * level + rng.normal(0.0, 0.15)
        noise[k] = level
    daily = np.repeat(rng.normal(0.0, 2.0, size=days), 86400 // step)
    return base + noise + daily


def write_fixture(directory, first_day: date, days: int, rooms: int = 5, step: int = 600,
                  seed: int = 0, season: str = "summer") -> tuple[Path, Path]:
    """Write ``weather.csv`` and ``occupancy.csv`` covering ``days`` whole days.

    Weather runs one day longer than occupancy so forecasts near the end of
    the last day have data.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    start = datetime.combine(first_day, datetime.min.time())
    mean, swing = SEASONS[season]
    temps = weather(days + 1, step, seed, mean, swing)
    occ = occupancy(days, rooms, step, seed + 1)
    per_day = 86400 // step

    weather_path = directory / "weather.csv"
    with open(weather_path, "w", encoding="utf-8") as fh:
        fh.write("timestamp,temperature\n")
        for k, v in enumerate(temps):
            ts = start + timedelta(seconds=k * step)
            fh.write(f"{ts.strftime(TIMESTAMP_FORMAT)},{v:.3f}\n")

    occ_path = directory / "occupancy.csv"
    with open(occ_path, "w", encoding="utf-8") as fh:
        fh.write("timestamp,zone,room,occupied\n")
        for d in range(days):
            for k in range(per_day):
                ts = (start + timedelta(days=d, seconds=k * step)).strftime(TIMESTAMP_FORMAT)
                for j in range(rooms):
                    fh.write(f"{ts},1,{j + 1},{int(occ[d, j, k])}\n")
    return weather_path, occ_path


# The scaled desk study: 120 days of history, a week of analysis days.
DESK_FIRST_DAY = date(2015, 1, 1)
DESK_HISTORY_DAYS = 120
DESK_SWEEP = (datetime(2015, 1, 29), datetime(2015, 2, 5))
DESK_SEED = 3


def desk_study(directory, control: int = 3, rooms: int = 5, season: str = "summer") -> Path:
    """Write the desk-study data plus a config file naming it; returns the config path."""
    directory = Path(directory)
    write_fixture(directory, DESK_FIRST_DAY, DESK_HISTORY_DAYS, rooms, 600, DESK_SEED, season)
    start, stop = (t.strftime(TIMESTAMP_FORMAT) for t in DESK_SWEEP)
    path = directory / "desk.cfg"
    path.write_text(
        "building: {\n"
        f"    rooms: {rooms},\n"
        f"    start: {start},\n"
        f"    stop: {stop},\n"
        "    horizon: 4,\n"
        "    time_step: 600,\n"
        f"    control: {control},\n"
        "    files: { weather: weather.csv, occupancy: occupancy.csv, output: desk }\n"
        "}\n",
        encoding="utf-8",
    )
    return path
