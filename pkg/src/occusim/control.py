"""Control strategies: HVAC off, occupancy-gated reactive control, and a
two-timescale receding-horizon planner (MPC).

The planner picks the supply-air temperature on an hourly grid and the
per-room airflow every sampling step. Its objective over the horizon is::

    J = sum_k [ P(k) tau / 3600  +  lambda * sum_j O_j(k) D_j(k) ]

with P the HVAC power (kW), D the PMV discomfort and O the *forecast*
occupancy. Small problems are solved by exhaustive enumeration; larger ones
by coordinate descent over the airflow grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .analyser import discomfort, pmv
from .config import ComfortBand, Control, PmvCoeffs, SimulationConfig
from .errors import InfeasibleForecast
from .thermal import DUCT_AREA, BuildingPhysics, ControlInput, RoomState, wall_exchange

# Schedules with at most this many airflow combinations (per supply temperature)
# are enumerated exhaustively.
ENUMERATION_LIMIT = 4096
MAX_SWEEPS = 10
TIE_TOL = 1e-12


@dataclass(frozen=True)
class ControlStrategy:
    variant: Control = Control.MPC
    horizon: int = 4  # hours
    tsa_grid: tuple[float, ...] = (12.0, 14.0, 16.0, 30.0, 35.0, 40.0)
    airflow_grid: tuple[float, ...] = (0.0, 0.1, 0.25, 0.5, 1.0)
    discomfort_weight: float = 1.0
    deadband: float = 0.1
    coeffs: PmvCoeffs = field(default_factory=PmvCoeffs)
    band: ComfortBand = field(default_factory=ComfortBand)

    def __post_init__(self):
        object.__setattr__(self, "variant", Control(self.variant))
        for name in ("tsa_grid", "airflow_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid or list(grid) != sorted(grid):
                raise ValueError(f"{name} must be nonempty and sorted ascending")
            object.__setattr__(self, name, grid)
        if self.airflow_grid[0] < 0:
            raise ValueError("airflow grid values must be non-negative")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1 hour")

    @classmethod
    def from_config(cls, cfg: SimulationConfig) -> "ControlStrategy":
        return cls(
            variant=cfg.control,
            horizon=cfg.horizon,
            tsa_grid=cfg.mpc.tsa_grid,
            airflow_grid=cfg.mpc.airflow_grid,
            discomfort_weight=cfg.mpc.discomfort_weight,
            deadband=cfg.reactive.deadband,
            coeffs=cfg.pmv,
            band=cfg.comfort,
        )

    @property
    def max_airflow(self) -> float:
        return self.airflow_grid[-1]

    def horizon_steps(self, tau: float) -> int:
        return math.ceil(self.horizon * 3600 / tau)

    def slow_period(self, tau: float) -> int:
        """Steps between supply-temperature decisions (one hour)."""
        return max(1, round(3600 / tau))


@dataclass(frozen=True, eq=False)
class Forecast:
    step: int  # seconds
    weather: np.ndarray  # (H,) outdoor temperature
    occupancy: np.ndarray  # (H, rooms) bits

    def __post_init__(self):
        w = np.array(self.weather, dtype=float).reshape(-1)
        o = np.array(self.occupancy, dtype=float)
        if o.ndim == 1:
            o = o.reshape(-1, 1)
        if len(w) != len(o):
            raise ValueError("weather and occupancy forecasts differ in length")
        object.__setattr__(self, "weather", w)
        object.__setattr__(self, "occupancy", o)

    def __len__(self) -> int:
        return len(self.weather)


@dataclass(frozen=True, eq=False)
class MPCPlan:
    control: ControlInput  # first step, the one to apply
    supply_air_temperature: float
    airflow: np.ndarray  # (H, rooms) planned flows
    airflow_index: np.ndarray  # (H, rooms) grid indices
    objective: float
    energy: float  # kWh over the horizon


@dataclass
class ControllerMemory:
    """What a controller carries between decision instants."""

    previous: ControlInput | None = None
    plan: MPCPlan | None = None


def planner_params(physics: BuildingPhysics, strategy: ControlStrategy, tau: float) -> np.ndarray:
    c, b = strategy.coeffs, strategy.band
    return np.array([
        physics.capacity, physics.u_outside, physics.wall_coeff, physics.q_equipment,
        physics.q_occupant, physics.fan_coefficient, physics.rho_cp,
        physics.eta_heat, physics.eta_cool,
        c.p1, c.p2, c.p3, c.p4, b.pmv_lower, b.pmv_upper,
        strategy.discomfort_weight, float(tau), DUCT_AREA,
    ])


def no_control(state: RoomState, t: int = 0) -> ControlInput:
    """HVAC off: no airflow, supply air equal to return air."""
    return ControlInput.off(state)


def _predict_next(state: RoomState, j: int, tsa: float, a: float, t_out: float, occ_j: float,
                  physics: BuildingPhysics, tau: float) -> float:
    t = state.temperatures
    q = (physics.u_outside * (t_out - t[j])
         + physics.wall_coeff * wall_exchange(t)[j]
         + occ_j * physics.q_occupant
         + physics.q_equipment * (a > 0)
         + physics.rho_cp * a * (tsa - t[j]))
    return t[j] + tau / physics.capacity * q


def reactive(state: RoomState, occupancy_now, physics: BuildingPhysics, strategy: ControlStrategy,
             t_out: float, tau: float, previous: ControlInput | None = None) -> ControlInput:
    """Occupancy-gated bang-bang control on the PMV comfort band.

    An occupied room whose still-air PMV leaves the band calls for cooling
    (coldest supply air) or heating (warmest supply air) with the smallest
    airflow predicted to bring the next-step PMV back inside. A room being
    conditioned keeps its airflow until PMV is ``deadband`` inside the band.
    The AHU serves one mode at a time; rooms asking for the other get no air.
    """
    occ = np.asarray(occupancy_now, dtype=float).reshape(-1)
    band, coeffs = strategy.band, strategy.coeffs
    still = pmv(state.temperatures, 0.0, coeffs)
    lo, hi = strategy.tsa_grid[0], strategy.tsa_grid[-1]

    prev_flow = np.zeros(len(state)) if previous is None else previous.airflow
    prev_cooling = previous is not None and previous.airflow.any() and previous.supply_air_temperature == lo
    prev_heating = previous is not None and previous.airflow.any() and previous.supply_air_temperature == hi

    # demand per room: +1 heat, -1 cool, 0 none; hold marks rooms keeping their flow
    demand = np.zeros(len(state), dtype=int)
    hold = np.zeros(len(state), dtype=bool)
    for j in range(len(state)):
        if occ[j] != 1:
            continue
        if still[j] > band.pmv_upper:
            demand[j] = -1
        elif still[j] < band.pmv_lower:
            demand[j] = 1
        elif prev_flow[j] > 0 and prev_cooling and still[j] > band.pmv_upper - strategy.deadband:
            demand[j], hold[j] = -1, True
        elif prev_flow[j] > 0 and prev_heating and still[j] < band.pmv_lower + strategy.deadband:
            demand[j], hold[j] = 1, True

    if not demand.any():
        return ControlInput.off(state)
    n_cool, n_heat = int((demand < 0).sum()), int((demand > 0).sum())
    if n_cool != n_heat:
        mode = -1 if n_cool > n_heat else 1
    else:
        excess_cool = float(np.clip(still - band.pmv_upper, 0, None)[demand < 0].sum())
        excess_heat = float(np.clip(band.pmv_lower - still, 0, None)[demand > 0].sum())
        mode = -1 if excess_cool > excess_heat else 1
    tsa = lo if mode < 0 else hi

    positive = [a for a in strategy.airflow_grid if a > 0]
    flows = np.zeros(len(state))
    for j in np.flatnonzero(demand == mode):
        if hold[j]:
            flows[j] = prev_flow[j]
            continue
        chosen, best = None, None
        for a in positive:
            nxt = pmv(_predict_next(state, j, tsa, a, t_out, occ[j], physics, tau), a / DUCT_AREA, coeffs)
            if (mode < 0 and nxt < band.pmv_upper) or (mode > 0 and nxt > band.pmv_lower):
                chosen = a
                break
            d = float(discomfort(nxt, band.pmv_lower, band.pmv_upper))
            if best is None or d < best[0]:
                best = (d, a)
        if chosen is None and best is not None:
            chosen = best[1]
        flows[j] = chosen or 0.0
    if not flows.any():
        return ControlInput.off(state)
    return ControlInput(tsa, flows)


def mpc_plan(state: RoomState, forecast: Forecast, physics: BuildingPhysics, strategy: ControlStrategy,
             t: int, held_tsa: float | None = None, warm_start: MPCPlan | None = None,
             method: str = "auto") -> MPCPlan:
    """Plan over the horizon and return the plan; ``plan.control`` is applied now.

    ``t`` is the step index since the start of the run. On hourly instants (or
    when no supply temperature is held) every supply temperature in the grid
    is tried; otherwise ``held_tsa`` is kept and only airflow is re-planned.
    ``method`` is ``"auto"``, ``"enumerate"`` or ``"descent"``.
    """
    tau = forecast.step
    horizon = strategy.horizon_steps(tau)
    if len(forecast) < horizon:
        raise InfeasibleForecast(f"forecast covers {len(forecast)} steps, horizon needs {horizon}")
    n = len(state)
    if forecast.occupancy.shape[1] != n:
        raise ValueError("forecast occupancy does not match the number of rooms")

    tout = np.ascontiguousarray(forecast.weather[:horizon])
    occ = np.ascontiguousarray(forecast.occupancy[:horizon])
    grid = np.array(strategy.airflow_grid)
    params = planner_params(physics, strategy, tau)
    t0 = state.temperatures.copy()

    slow = held_tsa is None or t % strategy.slow_period(tau) == 0
    candidates = list(strategy.tsa_grid) if slow else [float(held_tsa)]

    if method == "auto":
        combos = len(grid) ** (n * horizon) if n * horizon < 64 else math.inf
        method = "enumerate" if combos <= ENUMERATION_LIMIT else "descent"
    if method not in ("enumerate", "descent"):
        raise ValueError(f"unknown planning method {method!r}")

    start_idx = np.zeros((horizon, n), dtype=np.int64)
    if warm_start is not None and warm_start.airflow_index.shape[1] == n:
        prev = warm_start.airflow_index[1:horizon + 1]
        start_idx[:len(prev)] = prev
        if len(prev) < horizon and len(prev):
            start_idx[len(prev):] = prev[-1]

    best = None
    for tsa in candidates:
        idx = start_idx.copy()
        if method == "enumerate":
            j_val, e_val = _kernels.enumerate_all(t0, float(tsa), grid, tout, occ, params, horizon, n, TIE_TOL, idx)
        else:
            j_val, e_val, _ = _kernels.coordinate_descent(t0, float(tsa), idx, grid, tout, occ, params,
                                                          MAX_SWEEPS, TIE_TOL)
        # strict improvement only: earlier (lower) supply temperatures win ties
        if best is None or _kernels._better(j_val, e_val, best[0], best[1], TIE_TOL):
            best = (j_val, e_val, float(tsa), idx)

    j_val, e_val, tsa, idx = best
    flows = grid[idx]
    idx.setflags(write=False)
    flows.setflags(write=False)
    return MPCPlan(ControlInput(tsa, flows[0]), tsa, flows, idx, float(j_val), float(e_val))


def decide(strategy: ControlStrategy, state: RoomState, occupancy_now, forecast: Forecast | None,
           physics: BuildingPhysics, t: int, *, t_out: float, tau: float,
           memory: ControllerMemory | None = None) -> ControlInput:
    """Dispatch on the strategy variant; updates ``memory`` if given."""
    memory = memory if memory is not None else ControllerMemory()
    if strategy.variant == Control.NO_CONTROL:
        u = no_control(state, t)
    elif strategy.variant == Control.REACTIVE:
        u = reactive(state, occupancy_now, physics, strategy, t_out, tau, memory.previous)
    else:
        if forecast is None:
            raise InfeasibleForecast("MPC needs a forecast")
        prev = memory.plan
        plan = mpc_plan(state, forecast, physics, strategy, t,
                        held_tsa=None if prev is None else prev.supply_air_temperature,
                        warm_start=prev)
        memory.plan = plan
        u = plan.control
    memory.previous = u
    return u
