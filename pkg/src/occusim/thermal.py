"""Lumped first-order RC model of the rooms in one VAV zone.

Each room is a single air node of capacity C exchanging heat with outdoors
(U), with its neighbours through shared walls (rooms sit in a row, room j
touching j-1 and j+1), with occupants and equipment, and with supply air::

    C dT_j/dt = U (T_out - T_j) + w sum_k (T_k - T_j) + O_j Q_occ
                + Q_equip [a_j > 0] + rho a_j c_p (T_sa - T_j)

integrated with explicit Euler at the sampling step. Units: kJ, kW, kJ/K,
kJ/(K s), m3/s, degC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimulationConfig
from .errors import IntegrationUnstable

# airflow (m3/s) -> fan speed (m/s) through a 1 m2 duct
DUCT_AREA = 1.0
SANITY_ENVELOPE = (-40.0, 60.0)


@dataclass(frozen=True)
class BuildingPhysics:
    capacity: float = 2000.0  # C, kJ/K
    u_outside: float = 0.048  # U, kJ/(K s)
    q_equipment: float = 0.1  # kW
    q_occupant: float = 0.1  # kW
    fan_coefficient: float = 0.094
    air_density: float = 1.225  # kg/m3
    specific_heat: float = 1.003  # kJ/(kg K)
    eta_heat: float = 0.9
    eta_cool: float = 0.9
    wall_coeff: float = 0.024  # kJ/(K s)

    def __post_init__(self):
        for name in ("capacity", "u_outside", "air_density", "specific_heat", "eta_heat", "eta_cool"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("q_equipment", "q_occupant", "fan_coefficient", "wall_coeff"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_config(cls, cfg: SimulationConfig) -> "BuildingPhysics":
        r = cfg.room
        return cls(
            capacity=r.thermal_capacity,
            u_outside=r.heat_transfer_coeff_outside,
            q_equipment=r.equipment_load,
            q_occupant=r.occupant_load,
            fan_coefficient=r.fan_coefficient,
            air_density=cfg.air.density,
            specific_heat=cfg.air.specific_heat,
            eta_heat=cfg.ahu.heating_efficiency,
            eta_cool=cfg.ahu.cooling_efficiency,
            wall_coeff=r.wall_coeff,
        )

    @property
    def rho_cp(self) -> float:
        return self.air_density * self.specific_heat


@dataclass(frozen=True, eq=False)
class RoomState:
    temperatures: np.ndarray

    def __post_init__(self):
        t = np.array(self.temperatures, dtype=float).reshape(-1)
        t.setflags(write=False)
        object.__setattr__(self, "temperatures", t)

    def __eq__(self, other):
        if not isinstance(other, RoomState):
            return NotImplemented
        return np.array_equal(self.temperatures, other.temperatures)

    def __len__(self):
        return len(self.temperatures)

    @property
    def return_air(self) -> float:
        return float(self.temperatures.mean())


@dataclass(frozen=True, eq=False)
class ControlInput:
    supply_air_temperature: float
    airflow: np.ndarray  # m3/s per room

    def __post_init__(self):
        a = np.array(self.airflow, dtype=float).reshape(-1)
        if (a < 0).any() or not np.isfinite(a).all():
            raise ValueError("airflow must be finite and non-negative")
        a.setflags(write=False)
        object.__setattr__(self, "airflow", a)
        object.__setattr__(self, "supply_air_temperature", float(self.supply_air_temperature))

    def __eq__(self, other):
        if not isinstance(other, ControlInput):
            return NotImplemented
        return (self.supply_air_temperature == other.supply_air_temperature
                and np.array_equal(self.airflow, other.airflow))

    @property
    def fan_speed(self) -> np.ndarray:
        return self.airflow / DUCT_AREA

    @classmethod
    def off(cls, state: RoomState) -> "ControlInput":
        return cls(state.return_air, np.zeros(len(state)))


def adjacency_degree(n_rooms: int) -> int:
    return min(max(n_rooms - 1, 0), 2)


def wall_exchange(temps: np.ndarray) -> np.ndarray:
    """sum over neighbours of (T_k - T_j) for rooms in a row."""
    out = np.zeros_like(temps)
    d = np.diff(temps)
    out[:-1] += d
    out[1:] -= d
    return out


def heat_flows(state: RoomState, u: ControlInput, t_out: float, occupancy, phys: BuildingPhysics) -> np.ndarray:
    """Net heat flow into each room, kW."""
    t = state.temperatures
    occ = np.asarray(occupancy, dtype=float)
    a = u.airflow
    return (
        phys.u_outside * (t_out - t)
        + phys.wall_coeff * wall_exchange(t)
        + occ * phys.q_occupant
        + phys.q_equipment * (a > 0)
        + phys.rho_cp * a * (u.supply_air_temperature - t)
    )


def stability_bound(phys: BuildingPhysics, max_airflow: float, degree: int = 2) -> float:
    """Largest Euler step (s) for which the update stays a convex combination."""
    return phys.capacity / (phys.u_outside + degree * phys.wall_coeff + phys.rho_cp * max_airflow)


def step(state: RoomState, u: ControlInput, t_out: float, occupancy, phys: BuildingPhysics, tau: float) -> RoomState:
    """Advance room temperatures by one explicit-Euler step of ``tau`` seconds."""
    n = len(state)
    if len(u.airflow) != n or np.size(occupancy) != n:
        raise ValueError("airflow/occupancy length does not match the number of rooms")
    bound = stability_bound(phys, float(u.airflow.max(initial=0.0)), adjacency_degree(n))
    if not tau < bound:
        raise IntegrationUnstable(f"time step {tau}s exceeds the stability bound {bound:.1f}s")
    new = state.temperatures + (tau / phys.capacity) * heat_flows(state, u, t_out, occupancy, phys)
    lo, hi = SANITY_ENVELOPE
    if not (np.isfinite(new).all() and (new >= lo).all() and (new <= hi).all()):
        raise IntegrationUnstable(f"room temperature left [{lo}, {hi}] degC: {new}")
    return RoomState(new)


def power(u: ControlInput, state: RoomState, phys: BuildingPhysics) -> float:
    """Electrical power (kW): cube-law fan power plus supply-air conditioning."""
    a = u.airflow
    if not a.any():
        return 0.0
    fan = phys.fan_coefficient * float(np.sum(u.fan_speed ** 3))
    t_ret = state.return_air
    eta = phys.eta_heat if u.supply_air_temperature > t_ret else phys.eta_cool
    conditioning = phys.rho_cp * float(a.sum()) * abs(u.supply_air_temperature - t_ret) / eta
    return fan + conditioning
