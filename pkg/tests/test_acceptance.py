"""Acceptance suite: one recorded verdict per criterion.

Each test records PASS or FAIL through the ``verdict`` fixture; the summary
block at the end of the pytest run lists them all. Tolerances are the ones
the criteria pin, not loosened.
"""

import time
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from occusim.analyser import AcceptanceBox, discomfort, energy, pmv, robust
from occusim.cli import main
from occusim.config import ComfortBand, Control, PmvCoeffs, format_config, load_config, parse_config
from occusim.control import ControlStrategy, Forecast, mpc_plan
from occusim.errorlab import OccupancyString, build_error_matrix, select_erroneous
from occusim.experiment import emit_scatter, run_error_sweep
from occusim.synthetic import desk_study
from occusim.thermal import BuildingPhysics, ControlInput, RoomState, stability_bound, step

from test_control import brute_force
from conftest import write_config

EXAMPLE = Path(__file__).parent / "fixtures" / "example.cfg"
DESK_LEVELS = (5.0, 10.0, 15.0, 20.0)
DESK_REPLICATES = 15


# -- 1 ------------------------------------------------------------------------------

def test_criterion_1_analyser(verdict):
    t0 = time.perf_counter()
    coeffs = PmvCoeffs(0.2466, 1.4075, 0.581, 5.4468)
    checks = {
        "energy 6 x 1 kW": energy([1.0] * 6, 600) == 1.0,
        "pmv(22.088, 0)": abs(pmv(22.088, 0.0, coeffs)) <= 1e-3,
        "pmv(30, 0)": abs(pmv(30.0, 0.0, coeffs) - 1.9512) <= 1e-4,
        "D inside": discomfort(0.3, -0.5, 0.5) == 0.0,
        "D at edge": discomfort(0.5, -0.5, 0.5) == 0.0,
        "D above": discomfort(1.25, -0.5, 0.5) == 0.75,
        "D below": discomfort(-1.5, -0.5, 0.5) == 1.0,
        "robust 12/15": robust([(0.0, 0.0)] * 12 + [(99.0, 0.0)] * 3, AcceptanceBox(0.0, 0.0)) == 80.0,
    }
    elapsed = time.perf_counter() - t0
    bad = [k for k, ok in checks.items() if not ok]
    verdict("1", not bad and elapsed < 1.0, f"{len(checks) - len(bad)}/{len(checks)} exact, {elapsed * 1e3:.1f} ms")


# -- 2 ------------------------------------------------------------------------------

def test_criterion_2_error_matrix(verdict):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    violations, sets = 0, 250
    d0 = date(2015, 1, 1)
    for _ in range(sets):
        n, length = int(rng.integers(2, 21)), int(rng.integers(1, 289))
        # vary the density so near-identical and far-apart sets both occur
        bits = (rng.random((n, length)) < rng.random()).astype(np.int8)
        strings = [OccupancyString(d0 + timedelta(k), row) for k, row in enumerate(bits)]
        m = build_error_matrix(strings).cells
        # independent route: XOR counts
        oracle = 100.0 * (bits[:, None, :] ^ bits[None, :, :]).sum(axis=2) / length
        violations += int(not np.array_equal(m, oracle))
        violations += int(not np.array_equal(m, m.T))
        violations += int(np.count_nonzero(np.diag(m)))
        triangle = m[:, None, :] <= m[:, :, None] + m[None, :, :] + 1e-9
        violations += int(np.count_nonzero(~triangle))
        for r in range(n):
            pair = select_erroneous(strings[r], build_error_matrix(strings),
                                    float(rng.uniform(0, 100)), 1.0, int(rng.integers(2**32)))
            gap = abs(pair.erroneous.bits.mean() - pair.reference.bits.mean())
            violations += int(gap > pair.achieved_error / 100 + 1e-12)
    elapsed = time.perf_counter() - t0
    verdict("2", violations == 0 and elapsed < 10.0,
            f"{sets} sets, {violations} violations, {elapsed:.2f} s")


# -- 3 ------------------------------------------------------------------------------

def test_criterion_3_thermal(verdict):
    defaults = BuildingPhysics()
    bare = BuildingPhysics(wall_coeff=0.0, q_equipment=0.0, q_occupant=0.0)
    eq = RoomState([17.0, 17.0, 17.0, 17.0, 17.0])
    fixed = step(eq, ControlInput.off(eq), 17.0, np.zeros(5), defaults, 600) == eq
    s20 = RoomState([20.0])
    got = step(s20, ControlInput.off(s20), 30.0, [0], bare, 600).temperatures[0]
    euler = abs(got - 20.144) <= 1e-9 * 20.144

    rng = np.random.default_rng(33)
    violations, trials = 0, 1000
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        phys = BuildingPhysics(capacity=rng.uniform(200, 5000), u_outside=rng.uniform(1e-3, 0.2),
                               wall_coeff=rng.uniform(0, 0.2), q_equipment=0.0, q_occupant=0.0)
        flows = rng.choice([0.0, 0.05, 0.1, 0.25, 0.5, 1.0], size=n)
        tau = rng.uniform(1.0, 0.999 * min(stability_bound(phys, float(flows.max()), 2), 3600.0))
        state = RoomState(rng.uniform(-20, 45, n))
        u = ControlInput(rng.uniform(5, 45), flows)
        t_out = rng.uniform(-20, 45)
        out = step(state, u, t_out, rng.integers(0, 2, n), phys, tau).temperatures
        pts = np.concatenate([state.temperatures, [t_out, u.supply_air_temperature]])
        slack = 1e-9 * max(1.0, float(np.abs(pts).max()))
        violations += int(not ((out >= pts.min() - slack).all() and (out <= pts.max() + slack).all()))
    verdict("3", fixed and euler and violations == 0,
            f"fixed point {'exact' if fixed else 'moved'}, step -> {float(got)!r}, "
            f"{violations}/{trials} box violations")


# -- 4 ------------------------------------------------------------------------------

def random_instance(rng):
    n = int(rng.integers(1, 3))
    steps = int(rng.integers(1, 3))
    tau = 3600 // steps
    airflow = tuple(sorted(set(rng.choice([0.0, 0.05, 0.1, 0.2, 0.3, 0.5], size=int(rng.integers(1, 4))))))
    tsa = tuple(sorted(set(rng.choice([10.0, 14.0, 18.0, 26.0, 30.0, 38.0], size=int(rng.integers(1, 4))))))
    u_out, wall = rng.uniform(0.01, 0.1), rng.uniform(0, 0.05)
    q_eq, q_occ = rng.uniform(0, 0.3), rng.uniform(0, 0.3)
    min_cap = max(1.05 * tau * (u_out + 2 * wall + 1.225 * 1.003 * max(airflow)), tau * (q_eq + q_occ) / 5)
    physics = BuildingPhysics(capacity=rng.uniform(min_cap, 4 * min_cap), u_outside=u_out, wall_coeff=wall,
                              q_equipment=q_eq, q_occupant=q_occ,
                              fan_coefficient=rng.uniform(0, 0.2),
                              eta_heat=rng.uniform(0.5, 1), eta_cool=rng.uniform(0.5, 1))
    strategy = ControlStrategy(variant=Control.MPC, horizon=1, tsa_grid=tsa, airflow_grid=airflow,
                               discomfort_weight=rng.uniform(0, 20),
                               coeffs=PmvCoeffs(), band=ComfortBand())
    state = RoomState(rng.uniform(5, 35, n))
    forecast = Forecast(tau, rng.uniform(-10, 40, steps), rng.integers(0, 2, (steps, n)))
    return state, forecast, physics, strategy


def test_criterion_4_mpc_oracle(verdict):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst, count = 0.0, 120
    for _ in range(count):
        state, forecast, physics, strategy = random_instance(rng)
        assert strategy.horizon_steps(forecast.step) <= 2 and len(state) <= 2
        assert len(strategy.tsa_grid) <= 3 and len(strategy.airflow_grid) <= 3
        plan = mpc_plan(state, forecast, physics, strategy, t=0)
        j_min = brute_force(state, forecast, physics, strategy)[0]
        worst = max(worst, abs(plan.objective - j_min) / max(1.0, abs(j_min)))
    elapsed = time.perf_counter() - t0
    # "exactly" read as agreement to 1e-12 relative: the oracle sums in a different order
    verdict("4", worst <= 1e-12 and elapsed < 30.0,
            f"{count} instances, worst relative gap {worst:.1e}, {elapsed:.2f} s")


# -- 5 ------------------------------------------------------------------------------

def test_criterion_5_zero_error(study_config, verdict):
    detail = []
    ok = True
    for control in (1, 2, 3):
        rep = run_error_sweep(study_config(control=control), [0], replicates=15)
        for day in rep.days:
            cell = rep.cell(day, 0.0)
            same = len(cell) == 15 and len({(o.energy, o.discomfort) for o in cell}) == 1
            ok &= same and rep.robust(day, 0.0) == 100.0
        detail.append(f"{Control(control).name.lower()} robust {rep.mean_robust(0.0):g}%")
    verdict("5", ok, ", ".join(detail))


# -- 6 ------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    cfg = load_config(desk_study(tmp_path_factory.mktemp("desk")))
    t0 = time.perf_counter()
    rep = run_error_sweep(cfg, DESK_LEVELS, replicates=DESK_REPLICATES, workers=1)
    return rep, time.perf_counter() - t0


def test_criterion_6_runtime(desk, verdict):
    rep, elapsed = desk
    verdict("6r", elapsed < 300.0 and len(rep.days) == 7, f"{len(rep.days)} days, {elapsed:.0f} s")


def test_criterion_6a_spread(desk, verdict):
    rep, _ = desk
    s5 = float(np.mean([rep.spread(d, 5.0) for d in rep.days]))
    s20 = float(np.mean([rep.spread(d, 20.0) for d in rep.days]))
    per_day = sum(rep.spread(d, 20.0) >= rep.spread(d, 5.0) for d in rep.days)
    verdict("6a", s20 >= s5, f"mean spread {s5:.2f} -> {s20:.2f}; holds on {per_day}/7 days")


def test_criterion_6b_robust(desk, verdict):
    rep, _ = desk
    r5, r20 = rep.mean_robust(5.0), rep.mean_robust(20.0)
    per_day = sum(rep.robust(d, 20.0) <= rep.robust(d, 5.0) for d in rep.days)
    verdict("6b", r20 <= r5, f"mean robust {r5:.1f}% -> {r20:.1f}%; holds on {per_day}/7 days")


def test_criterion_6_target(desk, verdict):
    rep, _ = desk
    strict = 0
    for d in rep.days:
        r = [rep.robust(d, lv) for lv in DESK_LEVELS]
        strict += all(a > b for a, b in zip(r, r[1:]))
    means = "/".join(f"{rep.mean_robust(lv):.1f}" for lv in DESK_LEVELS)
    verdict("6t", strict >= 5, f"strict on {strict}/7 days; mean robust {means}")


# -- 7 ------------------------------------------------------------------------------

def test_criterion_7_config_and_reruns(small_study, tmp_path, monkeypatch, verdict):
    monkeypatch.chdir(tmp_path)
    exit_code = main(["validate", str(EXAMPLE)])
    wrote_nothing = list(tmp_path.iterdir()) == []

    cfg = load_config(EXAMPLE)
    text = format_config(cfg)
    fixed_point = parse_config(text) == cfg and format_config(parse_config(text)) == text

    study = load_config(write_config(small_study, name="acc7.cfg", control=3))
    blobs = []
    for name in ("first.csv", "second.csv"):
        emit_scatter(run_error_sweep(study, [5, 20], replicates=5), tmp_path / name)
        blobs.append((tmp_path / name).read_bytes())
    identical = blobs[0] == blobs[1]
    verdict("7", exit_code == 0 and wrote_nothing and fixed_point and identical,
            f"validate exit {exit_code}, round trip {'fixed' if fixed_point else 'drifts'}, "
            f"reruns {'identical' if identical else 'differ'}")
