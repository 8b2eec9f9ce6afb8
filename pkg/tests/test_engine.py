from dataclasses import replace
from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occusim.analyser import pmv
from occusim.config import Control, RoomParams, SimulationConfig
from occusim.engine import SimulationRun, analyse_result, perturb_weather, simulate
from occusim.errors import IntegrationUnstable
from occusim.series import TimeSeries
from occusim.thermal import BuildingPhysics, RoomState, step

T0 = datetime(2015, 1, 1)


def config(control=Control.NO_CONTROL, days=1, rooms=3, **kw):
    return SimulationConfig(start=T0, stop=T0 + timedelta(days=days), rooms=rooms, control=control, **kw)


def weather_for(cfg, values):
    values = np.broadcast_to(np.asarray(values, dtype=float), (cfg.n_steps + 24,)).copy()
    return TimeSeries(cfg.start, cfg.time_step, values)


def office(cfg, rooms=None):
    rooms = rooms or cfg.rooms
    per_day = 86400 // cfg.time_step
    day = np.zeros(per_day)
    day[per_day * 8 // 24: per_day * 17 // 24] = 1
    return np.tile(day, cfg.n_steps // per_day)[:, None].repeat(rooms, axis=1)


def test_equilibrium_without_control():
    cfg = config(initial_temperature=12.0)
    run = SimulationRun(cfg, weather_for(cfg, 12.0), np.zeros(cfg.n_steps), np.zeros(cfg.n_steps))
    res = simulate(run)
    assert (res.temperatures == 12.0).all()
    assert analyse_result(res, cfg).energy == 0.0


def test_result_lengths():
    cfg = config(Control.REACTIVE)
    res = simulate(SimulationRun(cfg, weather_for(cfg, 5.0), office(cfg), office(cfg)))
    n = cfg.n_steps
    assert res.n_steps == n == 144
    for arr in (res.outdoor, res.supply_air_temperature, res.power):
        assert arr.shape == (n,)
    for arr in (res.temperatures, res.airflow, res.pmv, res.discomfort, res.occupancy):
        assert arr.shape == (n, cfg.rooms)
    assert len(res.times()) == n and res.times()[1] - res.times()[0] == timedelta(seconds=600)


@pytest.mark.parametrize("control", list(Control))
def test_zero_error_runs_are_identical(control):
    cfg = config(control, rooms=2)
    occ = office(cfg)
    a = simulate(SimulationRun(cfg, weather_for(cfg, 4.0), occ, occ))
    b = simulate(SimulationRun(cfg, weather_for(cfg, 4.0), occ, occ))
    for name in ("temperatures", "airflow", "supply_air_temperature", "power", "discomfort"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_reactive_beats_no_control_on_a_hot_day():
    cfg = config(Control.REACTIVE, rooms=1, initial_temperature=26.0)
    occ = np.ones((cfg.n_steps, 1))
    w = weather_for(cfg, 33.0)
    passive = simulate(SimulationRun(replace(cfg, control=Control.NO_CONTROL), w, occ, occ))
    active = simulate(SimulationRun(cfg, w, occ, occ))
    assert analyse_result(active, cfg).energy > 0
    assert abs(active.pmv[-1, 0]) < abs(passive.pmv[-1, 0])
    assert passive.pmv[-1, 0] > cfg.comfort.pmv_upper


def test_mpc_keeps_rooms_more_comfortable_than_no_control():
    cfg = config(Control.MPC, rooms=2)
    occ = office(cfg)
    w = weather_for(cfg, 3.0)
    mpc = analyse_result(simulate(SimulationRun(cfg, w, occ, occ)), cfg)
    off = analyse_result(simulate(SimulationRun(replace(cfg, control=Control.NO_CONTROL), w, occ, occ)), cfg)
    assert mpc.mean_discomfort_percent < off.mean_discomfort_percent
    assert mpc.energy > 0


def test_replaying_inputs_reproduces_temperatures_bitwise():
    cfg = config(Control.MPC, rooms=3)
    occ = office(cfg)
    res = simulate(SimulationRun(cfg, weather_for(cfg, np.linspace(0, 9, cfg.n_steps + 24)), occ, occ))
    physics = BuildingPhysics.from_config(cfg)
    state = RoomState(res.temperatures[0])
    for k, u in enumerate(res.inputs()):
        assert np.array_equal(state.temperatures, res.temperatures[k])
        state = step(state, u, res.outdoor[k], res.occupancy[k], physics, cfg.time_step)
    assert state == res.final_state


def test_discrete_energy_bookkeeping():
    cfg = config(rooms=4, room=RoomParams(equipment_load=0.0, occupant_load=0.0))
    rng = np.random.default_rng(1)
    w = weather_for(cfg, 5 + rng.normal(0, 3, cfg.n_steps + 24))
    res = simulate(SimulationRun(cfg, w, office(cfg), office(cfg), initial_state=RoomState([25, 18, 12, 30])))
    C, U, wc, tau = 2000.0, 0.048, cfg.room.wall_coeff, cfg.time_step
    stored = C * float((res.final_state.temperatures - res.temperatures[0]).sum())
    flows = 0.0
    for k in range(res.n_steps):
        t = res.temperatures[k]
        flows += float(np.sum(U * (res.outdoor[k] - t)))
        flows += wc * sum((t[j + 1] - t[j]) + (t[j] - t[j + 1]) for j in range(len(t) - 1))
    assert stored == pytest.approx(tau * flows, rel=1e-6)


def test_forecast_only_steers_the_controller():
    cfg = config(Control.MPC, rooms=1, initial_temperature=15.0)
    truth = office(cfg)
    w = weather_for(cfg, 3.0)
    blind = simulate(SimulationRun(cfg, w, truth, np.zeros_like(truth)))
    informed = simulate(SimulationRun(cfg, w, truth, truth))
    assert not blind.airflow.any()
    assert informed.airflow.any()
    # occupant heat and comfort accounting follow the true occupancy in both runs
    assert np.array_equal(blind.occupancy, informed.occupancy)
    rep = analyse_result(blind, cfg)
    assert rep.discomfort_percent[0] > 0


def test_unstable_time_step_rejected_up_front():
    cfg = config(Control.REACTIVE, time_step=3600, room=RoomParams(thermal_capacity=500.0))
    with pytest.raises(IntegrationUnstable):
        simulate(SimulationRun(cfg, weather_for(cfg, 5.0), office(cfg), office(cfg)))


def test_run_validates_shapes():
    cfg = config()
    with pytest.raises(ValueError):
        SimulationRun(cfg, weather_for(cfg, 5.0), np.zeros((10, 3)), np.zeros((10, 3)))
    with pytest.raises(ValueError):
        SimulationRun(cfg, TimeSeries(T0, 600, np.zeros(5)), office(cfg), office(cfg))


# -- weather perturbation --------------------------------------------------------

def test_zero_percent_is_identity():
    w = TimeSeries(T0, 600, np.arange(10.0))
    assert perturb_weather(w, 0, 3) == w


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-40, 45), min_size=1, max_size=100), st.floats(0, 100), st.integers(0, 2**63 - 1))
def test_perturbation_bounded_and_seeded(values, percent, seed):
    w = TimeSeries(T0, 600, np.array(values))
    out = perturb_weather(w, percent, seed)
    assert np.all(np.abs(out.values - w.values) <= np.abs(w.values) * percent / 100 + 1e-12)
    assert perturb_weather(w, percent, seed) == out


def test_perturbed_weather_only_reaches_the_controller():
    cfg = config(Control.REACTIVE, rooms=1, error=replace(SimulationConfig(T0, T0 + timedelta(1)).error,
                                                            external_temperature=10.0))
    occ = office(cfg)
    res = simulate(SimulationRun(cfg, weather_for(cfg, 30.0), occ, occ, seed=5))
    assert (res.outdoor == 30.0).all()
