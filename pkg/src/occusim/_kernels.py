"""Compiled inner loops for the receding-horizon planner.

The model here mirrors :mod:`occusim.thermal` and :mod:`occusim.analyser`
term for term; tests cross-check the two.

``params`` layout (float64 vector)::

    0 C, 1 U, 2 wall, 3 Q_equip, 4 Q_occ, 5 c_fan, 6 rho*c_p,
    7 eta_heat, 8 eta_cool, 9 P1, 10 P2, 11 P3, 12 P4, 13 P_ll, 14 P_ul,
    15 lambda, 16 tau, 17 duct area
"""

from __future__ import annotations

import numpy as np
from numba import njit

N_PARAMS = 18


@njit(cache=True)
def step_cost(temps, tsa, flows, tout, occ, p, out_next):
    """Cost (objective, energy kWh) of one step; writes next temperatures into ``out_next``."""
    n = temps.shape[0]
    cap, u_out, wall, q_eq, q_occ = p[0], p[1], p[2], p[3], p[4]
    c_fan, rcp, eta_h, eta_c = p[5], p[6], p[7], p[8]
    p1, p2, p3, p4, p_ll, p_ul = p[9], p[10], p[11], p[12], p[13], p[14]
    lam, tau, duct = p[15], p[16], p[17]

    t_ret = 0.0
    for j in range(n):
        t_ret += temps[j]
    t_ret /= n

    sum_a = 0.0
    fan = 0.0
    disc = 0.0
    for j in range(n):
        a = flows[j]
        v = a / duct
        sum_a += a
        fan += c_fan * v * v * v
        if occ[j] != 0.0:
            pm = p1 * temps[j] - p2 * v + p3 * v * v - p4
            d = 0.0
            if p_ll - pm > d:
                d = p_ll - pm
            if pm - p_ul > d:
                d = pm - p_ul
            disc += d

    power = 0.0
    if sum_a > 0.0:
        eta = eta_h if tsa > t_ret else eta_c
        power = fan + rcp * sum_a * abs(tsa - t_ret) / eta
    energy = power * tau / 3600.0

    k = tau / cap
    for j in range(n):
        a = flows[j]
        lap = 0.0
        if j > 0:
            lap += temps[j - 1] - temps[j]
        if j < n - 1:
            lap += temps[j + 1] - temps[j]
        q = u_out * (tout - temps[j]) + wall * lap + occ[j] * q_occ + rcp * a * (tsa - temps[j])
        if a > 0.0:
            q += q_eq
        out_next[j] = temps[j] + k * q
    return energy + lam * disc, energy


@njit(cache=True)
def rollout(t0, tsa, flows, tout, occ, p):
    """Total (objective, energy) of an airflow schedule ``flows`` (H, n)."""
    horizon, n = flows.shape
    cur = t0.copy()
    nxt = np.empty(n)
    total_j = 0.0
    total_e = 0.0
    for k in range(horizon):
        cj, ce = step_cost(cur, tsa, flows[k], tout[k], occ[k], p, nxt)
        total_j += cj
        total_e += ce
        cur[:] = nxt
    return total_j, total_e


@njit(cache=True)
def _better(j_new, e_new, j_best, e_best, tol):
    scale = max(1.0, abs(j_best))
    if j_new < j_best - tol * scale:
        return True
    if j_new <= j_best + tol * scale and e_new < e_best - tol * max(1.0, abs(e_best)):
        return True
    return False


@njit(cache=True)
def _tail(traj, tsa, flows, tout, occ, p, k0, buf_a, buf_b, bound):
    """Cost of steps ``k0..H-1``; gives up (returning inf) once the objective
    passes ``bound``. Exact pruning because every step cost is non-negative."""
    horizon, n = flows.shape
    cur = buf_a
    nxt = buf_b
    cur[:] = traj[k0]
    total_j = 0.0
    total_e = 0.0
    for k in range(k0, horizon):
        cj, ce = step_cost(cur, tsa, flows[k], tout[k], occ[k], p, nxt)
        total_j += cj
        total_e += ce
        if total_j > bound:
            return np.inf, np.inf
        cur[:] = nxt
    return total_j, total_e


@njit(cache=True)
def _refresh(traj, cost_j, cost_e, tsa, flows, tout, occ, p, k0):
    horizon, n = flows.shape
    nxt = np.empty(n)
    for k in range(k0, horizon):
        cj, ce = step_cost(traj[k], tsa, flows[k], tout[k], occ[k], p, nxt)
        cost_j[k] = cj
        cost_e[k] = ce
        traj[k + 1] = nxt


@njit(cache=True)
def coordinate_descent(t0, tsa, idx, grid, tout, occ, p, max_sweeps, tol):
    """Improve the airflow index schedule ``idx`` (H, n) in place.

    Gauss-Seidel over (step, room) coordinates; each coordinate takes the grid
    value with the lowest objective (ties: lower energy, then lower airflow).
    Stops after a sweep without moves or after ``max_sweeps``.
    Returns (objective, energy, sweeps used).
    """
    horizon, n = idx.shape
    g = grid.shape[0]
    flows = np.empty((horizon, n))
    for k in range(horizon):
        for j in range(n):
            flows[k, j] = grid[idx[k, j]]
    traj = np.empty((horizon + 1, n))
    traj[0] = t0
    cost_j = np.empty(horizon)
    cost_e = np.empty(horizon)
    _refresh(traj, cost_j, cost_e, tsa, flows, tout, occ, p, 0)
    buf_a = np.empty(n)
    buf_b = np.empty(n)

    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        moved = False
        for k in range(horizon):
            for j in range(n):
                cur = idx[k, j]
                best = cur
                best_j = 0.0
                best_e = 0.0
                for m in range(k, horizon):
                    best_j += cost_j[m]
                    best_e += cost_e[m]
                for c in range(g):
                    if c == cur:
                        continue
                    flows[k, j] = grid[c]
                    bound = best_j + tol * max(1.0, abs(best_j))
                    tj, te = _tail(traj, tsa, flows, tout, occ, p, k, buf_a, buf_b, bound)
                    if tj > bound:
                        continue
                    if _better(tj, te, best_j, best_e, tol):
                        best, best_j, best_e = c, tj, te
                    elif c < best and not _better(best_j, best_e, tj, te, tol):
                        # tie within tolerance: prefer the lower airflow
                        best, best_j, best_e = c, tj, te
                flows[k, j] = grid[best]
                if best != cur:
                    idx[k, j] = best
                    moved = True
                    _refresh(traj, cost_j, cost_e, tsa, flows, tout, occ, p, k)
        if not moved:
            break
    total_j = 0.0
    total_e = 0.0
    for k in range(horizon):
        total_j += cost_j[k]
        total_e += cost_e[k]
    return total_j, total_e, sweeps


@njit(cache=True)
def enumerate_all(t0, tsa, grid, tout, occ, p, horizon, n, tol, best_idx):
    """Exhaustive search over every airflow schedule; result written to ``best_idx``.

    Schedules are visited in lexicographic order of grid indices, so on ties
    (objective, then energy) the lowest airflows win.
    """
    g = grid.shape[0]
    m = horizon * n
    digits = np.zeros(m, dtype=np.int64)
    flows = np.empty((horizon, n))
    best_j = np.inf
    best_e = np.inf
    while True:
        for q in range(m):
            flows[q // n, q % n] = grid[digits[q]]
        tj, te = rollout(t0, tsa, flows, tout, occ, p)
        if best_j == np.inf or _better(tj, te, best_j, best_e, tol):
            best_j = tj
            best_e = te
            for q in range(m):
                best_idx[q // n, q % n] = digits[q]
        # odometer increment, last coordinate fastest
        q = m - 1
        while q >= 0:
            digits[q] += 1
            if digits[q] < g:
                break
            digits[q] = 0
            q -= 1
        if q < 0:
            break
    return best_j, best_e
