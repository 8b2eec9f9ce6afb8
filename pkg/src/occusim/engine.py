"""Closed-loop simulation of one zone.

The controller only ever sees the forecast occupancy; occupant heat gains
and comfort accounting use the true occupancy.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .analyser import AnalysisReport, analyse
from .config import Control, SimulationConfig
from .control import ControllerMemory, ControlStrategy, Forecast, decide
from .errors import IntegrationUnstable
from .series import TimeSeries
from .thermal import (
    DUCT_AREA,
    BuildingPhysics,
    ControlInput,
    RoomState,
    adjacency_degree,
    power,
    stability_bound,
    step,
)


def _as_matrix(occupancy, n_steps: int, rooms: int) -> np.ndarray:
    occ = np.asarray(occupancy, dtype=float)
    if occ.ndim == 1:
        occ = np.repeat(occ[:, None], rooms, axis=1)
    if occ.shape != (n_steps, rooms):
        raise ValueError(f"occupancy has shape {occ.shape}, expected {(n_steps, rooms)}")
    if not np.isin(occ, (0.0, 1.0)).all():
        raise ValueError("occupancy must be 0/1")
    return occ


@dataclass(frozen=True, eq=False)
class SimulationRun:
    """Inputs for one simulation over ``[config.start, config.stop)``.

    ``weather`` starts at ``config.start`` and may run past ``config.stop``;
    the extra samples feed forecasts near the end of the window.
    Occupancy arrays are (n_t, rooms), or (n_t,) to broadcast one zone-level
    trace to every room.
    """

    config: SimulationConfig
    weather: TimeSeries
    true_occupancy: np.ndarray
    forecast_occupancy: np.ndarray
    initial_state: RoomState | None = None
    seed: int = 0

    def __post_init__(self):
        cfg = self.config
        n = cfg.n_steps
        if self.weather.start != cfg.start or self.weather.step != cfg.time_step:
            raise ValueError("weather must start at config.start with step config.time_step")
        if len(self.weather) < n or self.weather.has_missing:
            raise ValueError("weather must be preprocessed and cover the simulation window")
        object.__setattr__(self, "true_occupancy", _as_matrix(self.true_occupancy, n, cfg.rooms))
        object.__setattr__(self, "forecast_occupancy", _as_matrix(self.forecast_occupancy, n, cfg.rooms))
        if self.initial_state is not None and len(self.initial_state) != cfg.rooms:
            raise ValueError("initial state does not match the number of rooms")


@dataclass(frozen=True, eq=False)
class SimulationResult:
    start: datetime
    step: int
    outdoor: np.ndarray  # (n_t,)
    temperatures: np.ndarray  # (n_t, rooms), at the start of each step
    occupancy: np.ndarray  # (n_t, rooms), true
    forecast_occupancy: np.ndarray  # (n_t, rooms)
    supply_air_temperature: np.ndarray  # (n_t,)
    airflow: np.ndarray  # (n_t, rooms)
    power: np.ndarray  # (n_t,) kW
    pmv: np.ndarray  # (n_t, rooms)
    discomfort: np.ndarray  # (n_t, rooms), zero when unoccupied
    final_state: RoomState | None = None

    @property
    def n_steps(self) -> int:
        return len(self.power)

    @property
    def rooms(self) -> int:
        return self.temperatures.shape[1]

    @property
    def fan_speed(self) -> np.ndarray:
        return self.airflow / DUCT_AREA

    def times(self) -> list[datetime]:
        return [self.start + timedelta(seconds=self.step * k) for k in range(self.n_steps)]

    def inputs(self) -> list[ControlInput]:
        return [ControlInput(tsa, a) for tsa, a in zip(self.supply_air_temperature, self.airflow)]


def perturb_weather(weather: TimeSeries, percent: float, seed: int) -> TimeSeries:
    """Scale each sample by ``1 + u``, ``u ~ U[-percent/100, percent/100]``."""
    if not 0 <= percent <= 100:
        raise ValueError(f"percent {percent} outside [0, 100]")
    if percent == 0:
        return weather
    rng = np.random.default_rng(seed)
    u = rng.uniform(-percent / 100.0, percent / 100.0, size=len(weather))
    return TimeSeries(weather.start, weather.step, weather.values * (1.0 + u))


def _window(values: np.ndarray, t: int, horizon: int) -> np.ndarray:
    """``values[t:t+horizon]`` padded by repeating the last available sample."""
    out = values[t:t + horizon]
    if len(out) < horizon:
        pad = np.repeat(values[-1:], horizon - len(out), axis=0)
        out = np.concatenate([out, pad])
    return out


def simulate(run: SimulationRun) -> SimulationResult:
    cfg = run.config
    tau = cfg.time_step
    n_t, rooms = cfg.n_steps, cfg.rooms
    physics = BuildingPhysics.from_config(cfg)
    strategy = ControlStrategy.from_config(cfg)

    if cfg.control != Control.NO_CONTROL:
        bound = stability_bound(physics, strategy.max_airflow, adjacency_degree(rooms))
        if not tau < bound:
            raise IntegrationUnstable(f"time step {tau}s exceeds the stability bound {bound:.1f}s")

    outdoor = run.weather.values
    predicted = perturb_weather(run.weather, cfg.error.external_temperature, run.seed).values
    if run.initial_state is not None:
        state = run.initial_state
    elif cfg.initial_temperature is not None:
        state = RoomState(np.full(rooms, cfg.initial_temperature))
    else:
        state = RoomState(np.full(rooms, outdoor[0]))

    horizon = strategy.horizon_steps(tau)
    memory = ControllerMemory()
    temps = np.empty((n_t, rooms))
    tsa = np.empty(n_t)
    flows = np.empty((n_t, rooms))
    pwr = np.empty(n_t)
    true_occ = run.true_occupancy
    for t in range(n_t):
        forecast = None
        if cfg.control == Control.MPC:
            forecast = Forecast(tau, _window(predicted, t, horizon), _window(run.forecast_occupancy, t, horizon))
        u = decide(strategy, state, true_occ[t], forecast, physics, t,
                   t_out=outdoor[t], tau=tau, memory=memory)
        temps[t] = state.temperatures
        tsa[t] = u.supply_air_temperature
        flows[t] = u.airflow
        pwr[t] = power(u, state, physics)
        state = step(state, u, outdoor[t], true_occ[t], physics, tau)

    report = analyse(pwr, temps, flows / DUCT_AREA, true_occ, tau, cfg.pmv, cfg.comfort)
    return SimulationResult(
        start=cfg.start, step=tau, outdoor=outdoor[:n_t].copy(), temperatures=temps,
        occupancy=true_occ, forecast_occupancy=run.forecast_occupancy,
        supply_air_temperature=tsa, airflow=flows, power=pwr, pmv=report.pmv_series,
        discomfort=report.discomfort_series, final_state=state,
    )


def analyse_result(result: SimulationResult, config: SimulationConfig) -> AnalysisReport:
    return analyse(result.power, result.temperatures, result.fan_speed, result.occupancy,
                   result.step, config.pmv, config.comfort)
