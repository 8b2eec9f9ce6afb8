"""Error sweeps: for every day and error level, simulate a perfect-forecast
baseline and a set of replicates with erroneous occupancy forecasts, then
score each replicate against an acceptance box around the baseline.

Replicate ``r`` of level ``L`` on day ``d`` draws its forecast for room ``j``
with seed ``replicate_seed(seed, d, L, r, j)``, so any single replicate can be
re-run on its own.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import date, datetime, time, timedelta

import numpy as np

from .analyser import (
    DEFAULT_DISCOMFORT_HALFWIDTH,
    DEFAULT_ENERGY_HALFWIDTH,
    AcceptanceBox,
    robust,
)
from .config import SimulationConfig
from .engine import SimulationRun, analyse_result, simulate
from .errorlab import ErrorPair, inject_error, replicate_seed
from .errors import DataError, OccusimError, WriteFailed
from .master import StudyInputs, load_inputs

log = logging.getLogger(__name__)

BASELINE = -1  # replicate index of the perfect-forecast run


@dataclass(frozen=True)
class Outcome:
    day: date
    level: float
    replicate: int
    energy: float  # kWh, NaN if failed
    discomfort: float  # mean D% over rooms, NaN if failed
    achieved_error: float  # mean over rooms
    tolerance: float  # widest final tolerance over rooms
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class SweepReport:
    levels: tuple[float, ...]
    replicates: int
    baselines: tuple[Outcome, ...]
    outcomes: tuple[Outcome, ...]  # sorted by (day, level, replicate)
    energy_halfwidth: float = DEFAULT_ENERGY_HALFWIDTH
    discomfort_halfwidth: float = DEFAULT_DISCOMFORT_HALFWIDTH

    @property
    def days(self) -> list[date]:
        return [b.day for b in self.baselines]

    def box(self, day: date) -> AcceptanceBox:
        b = next(b for b in self.baselines if b.day == day)
        return AcceptanceBox(b.energy, b.discomfort, self.energy_halfwidth, self.discomfort_halfwidth)

    def cell(self, day: date, level: float) -> list[Outcome]:
        return [o for o in self.outcomes if o.day == day and o.level == level]

    def in_box(self, o: Outcome) -> bool:
        return not o.failed and self.box(o.day).contains(o.energy, o.discomfort)

    def robust(self, day: date, level: float) -> float:
        # failed replicates carry NaN metrics and so fall outside the box
        return robust([(o.energy, o.discomfort) for o in self.cell(day, level)], self.box(day))

    def mean_robust(self, level: float) -> float:
        return float(np.mean([self.robust(d, level) for d in self.days]))

    def spread(self, day: date, level: float) -> float:
        """Largest pairwise distance between replicates in the (energy, discomfort) plane."""
        pts = [(o.energy, o.discomfort) for o in self.cell(day, level) if not o.failed]
        return max((math.dist(a, b) for a, b in itertools.combinations(pts, 2)), default=0.0)

    def summary(self) -> dict:
        return {
            "days": self.days,
            "levels": list(self.levels),
            "replicates": self.replicates,
            "box": {"energy_kwh": self.energy_halfwidth, "discomfort_pp": self.discomfort_halfwidth},
            "baseline": {b.day.isoformat(): {"energy_kwh": b.energy, "mean_discomfort_percent": b.discomfort}
                         for b in self.baselines},
            "robust_percent": {
                repr(float(level)): {
                    "mean": self.mean_robust(level),
                    "per_day": {d.isoformat(): self.robust(d, level) for d in self.days},
                }
                for level in self.levels
            },
            "failed_replicates": sum(o.failed for o in self.outcomes),
        }


def sweep_days(cfg: SimulationConfig, inputs: StudyInputs) -> list[date]:
    """Whole days inside ``[start, stop)`` that have occupancy history."""
    first = cfg.start.date() if cfg.start.time() == time() else cfg.start.date() + timedelta(days=1)
    out = []
    d = first
    while datetime.combine(d + timedelta(days=1), time()) <= cfg.stop:
        out.append(d)
        d += timedelta(days=1)
    have = set(inputs.days)
    missing = [d for d in out if d not in have]
    if missing:
        log.warning("skipping %d day(s) without occupancy data", len(missing))
    return [d for d in out if d in have]


def _day_pairs(inputs: StudyInputs, day: date, level: float, replicate: int) -> list[ErrorPair]:
    seed = inputs.config.rng_seed
    return [
        inject_error(string, matrix, level, inputs.config.error.tolerance,
                     replicate_seed(seed, day.isoformat(), repr(float(level)), replicate, j))
        for j, (string, matrix) in enumerate(zip(inputs.strings_for(day), inputs.matrices))
    ]


def run_day(inputs: StudyInputs, day: date, level: float, replicate: int) -> Outcome:
    """Simulate one day with forecasts drawn at ``level`` percent error."""
    cfg = inputs.config
    seed = cfg.rng_seed
    truth, forecast, achieved, tols = [], [], [], []
    try:
        for pair in _day_pairs(inputs, day, level, replicate):
            truth.append(pair.reference.bits)
            forecast.append(pair.erroneous.bits)
            achieved.append(pair.achieved_error)
            tols.append(pair.tolerance)
        start = datetime.combine(day, time())
        stop = start + timedelta(days=1)
        day_cfg = replace(cfg, start=start, stop=stop)
        run = SimulationRun(
            config=day_cfg,
            weather=inputs.weather_from(start, stop),
            true_occupancy=np.array(truth, dtype=float).T,
            forecast_occupancy=np.array(forecast, dtype=float).T,
            seed=replicate_seed(seed, day.isoformat(), repr(float(level)), replicate, "weather"),
        )
        report = analyse_result(simulate(run), day_cfg)
    except OccusimError as exc:
        log.warning("replicate %s/%s/%s failed: %s", day, level, replicate, exc)
        return Outcome(day, level, replicate, math.nan, math.nan,
                       float(np.mean(achieved)) if achieved else math.nan,
                       max(tols, default=math.nan), error=str(exc))
    return Outcome(day, level, replicate, report.energy, report.mean_discomfort_percent,
                   float(np.mean(achieved)), float(max(tols)))


def run_window(inputs: StudyInputs, level: float, replicate: int = 0):
    """One continuous run over every whole day of the configured window.

    Each day's true and forecast occupancy are drawn exactly as replicate
    ``replicate`` of :func:`run_day` would draw them; the thermal state carries
    over from one day to the next. Returns (result, report, pairs by day).
    """
    cfg = inputs.config
    days = sweep_days(cfg, inputs)
    if not days:
        raise DataError("the simulation window holds no whole day with occupancy data")
    pairs = {d: _day_pairs(inputs, d, level, replicate) for d in days}
    if any(b - a != timedelta(days=1) for a, b in zip(days, days[1:])):
        raise DataError("occupancy data has gaps inside the simulation window")
    truth = np.concatenate([np.array([p.reference.bits for p in pairs[d]], dtype=float).T for d in days])
    forecast = np.concatenate([np.array([p.erroneous.bits for p in pairs[d]], dtype=float).T for d in days])
    start = datetime.combine(days[0], time())
    stop = datetime.combine(days[-1] + timedelta(days=1), time())
    win_cfg = replace(cfg, start=start, stop=stop)
    run = SimulationRun(
        config=win_cfg,
        weather=inputs.weather_from(start, stop),
        true_occupancy=truth,
        forecast_occupancy=forecast,
        seed=replicate_seed(cfg.rng_seed, start.isoformat(), repr(float(level)), replicate, "weather"),
    )
    result = simulate(run)
    return result, analyse_result(result, win_cfg), pairs


_WORKER_INPUTS: StudyInputs | None = None


def _init_worker(inputs: StudyInputs) -> None:
    global _WORKER_INPUTS
    _WORKER_INPUTS = inputs


def _run_job(job) -> Outcome:
    return run_day(_WORKER_INPUTS, *job)


def run_error_sweep(config: SimulationConfig, error_levels, replicates: int | None = None,
                    workers: int = 1, inputs: StudyInputs | None = None,
                    energy_halfwidth: float = DEFAULT_ENERGY_HALFWIDTH,
                    discomfort_halfwidth: float = DEFAULT_DISCOMFORT_HALFWIDTH) -> SweepReport:
    levels = tuple(float(v) for v in error_levels)
    if not levels or any(not 0 <= v <= 100 for v in levels):
        raise ValueError("error levels must lie in [0, 100]")
    replicates = config.replicates if replicates is None else replicates
    if replicates < 1:
        raise ValueError("need at least one replicate")
    inputs = inputs if inputs is not None else load_inputs(config)
    days = sweep_days(config, inputs)

    jobs = [(d, 0.0, BASELINE) for d in days]
    jobs += [(d, lvl, r) for d in days for lvl in levels for r in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(inputs,)) as pool:
            results = list(pool.map(_run_job, jobs, chunksize=4))
    else:
        results = [run_day(inputs, *job) for job in jobs]

    baselines = tuple(o for o in results if o.replicate == BASELINE)
    failed = [b for b in baselines if b.failed]
    if failed:
        raise RuntimeError(f"baseline run failed for {failed[0].day}: {failed[0].error}")
    outcomes = sorted((o for o in results if o.replicate != BASELINE),
                      key=lambda o: (o.day, o.level, o.replicate))
    return SweepReport(levels, replicates, baselines, tuple(outcomes), energy_halfwidth, discomfort_halfwidth)


SCATTER_HEADER = ["day", "error_level", "replicate", "E_kwh", "D_percent", "achieved_error", "in_box"]


def emit_scatter(report: SweepReport, path) -> None:
    """Plot-ready CSV: one baseline row per day, then one row per replicate."""
    if not report.baselines:
        raise ValueError("empty sweep")

    def num(x):
        return "" if math.isnan(x) else repr(float(x))

    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCATTER_HEADER)
            for b in report.baselines:
                w.writerow([b.day.isoformat(), num(b.level), "baseline", num(b.energy),
                            num(b.discomfort), num(b.achieved_error), 1])
                for o in (o for o in report.outcomes if o.day == b.day):
                    w.writerow([o.day.isoformat(), num(o.level), o.replicate, num(o.energy),
                                num(o.discomfort), num(o.achieved_error), int(report.in_box(o))])
    except OSError as exc:
        raise WriteFailed(f"cannot write {path}: {exc.strerror or exc}") from None
