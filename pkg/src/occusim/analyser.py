"""Energy, thermal-comfort and robustness metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ComfortBand, PmvCoeffs
from .errors import LengthMismatch, NeverOccupied

# Box half-widths around the perfect-prediction run.
DEFAULT_ENERGY_HALFWIDTH = 20.0  # kWh
DEFAULT_DISCOMFORT_HALFWIDTH = 5.0  # percentage points


@dataclass(frozen=True, eq=False)
class AnalysisReport:
    energy: float  # kWh
    pmv_series: np.ndarray  # (n_t, rooms)
    discomfort_series: np.ndarray  # (n_t, rooms)
    discomfort_percent: np.ndarray  # (rooms,), NaN for a room never occupied
    robust: float | None = None

    @property
    def mean_discomfort_percent(self) -> float:
        """Unweighted mean of per-room D% over rooms that were occupied (0 if none)."""
        d = self.discomfort_percent[~np.isnan(self.discomfort_percent)]
        return float(d.mean()) if d.size else 0.0


@dataclass(frozen=True)
class AcceptanceBox:
    baseline_energy: float
    baseline_discomfort: float
    energy_halfwidth: float = DEFAULT_ENERGY_HALFWIDTH
    discomfort_halfwidth: float = DEFAULT_DISCOMFORT_HALFWIDTH

    def __post_init__(self):
        if self.energy_halfwidth < 0 or self.discomfort_halfwidth < 0:
            raise ValueError("box half-widths must be non-negative")

    def contains(self, energy: float, discomfort: float) -> bool:
        return (abs(energy - self.baseline_energy) <= self.energy_halfwidth
                and abs(discomfort - self.baseline_discomfort) <= self.discomfort_halfwidth)


def energy(power_series, tau: float) -> float:
    """Energy in kWh of a power series (kW) sampled every ``tau`` seconds."""
    p = np.asarray(power_series, dtype=float)
    if p.size == 0:
        raise ValueError("power series is empty")
    return float(p.sum() * tau / 3600.0)


def pmv(t_oc, v_a, coeffs: PmvCoeffs):
    """Linearised PMV regression in room temperature (degC) and fan speed (m/s)."""
    return coeffs.p1 * t_oc - coeffs.p2 * v_a + coeffs.p3 * v_a * v_a - coeffs.p4


def discomfort(p, p_ll: float, p_ul: float):
    """Distance of PMV outside the comfort band ``[p_ll, p_ul]``."""
    return np.maximum(0.0, np.maximum(p_ll - p, p - p_ul))


def discomfort_percent(d_series, o_series, occupied_only: bool = False) -> float:
    """Share of discomfort instants, normalised by the number of occupied instants.

    By default every instant with nonzero discomfort counts in the numerator;
    ``occupied_only`` restricts it to occupied instants.
    """
    d = np.asarray(d_series, dtype=float)
    o = np.asarray(o_series)
    if d.shape != o.shape:
        raise LengthMismatch(f"discomfort {d.shape} vs occupancy {o.shape}")
    occupied = o == 1
    n_occ = int(occupied.sum())
    if n_occ == 0:
        raise NeverOccupied("no occupied instants")
    uncomfortable = d != 0
    if occupied_only:
        uncomfortable &= occupied
    return 100.0 * int(uncomfortable.sum()) / n_occ


def robust(reports: Sequence[AnalysisReport | tuple[float, float]], box: AcceptanceBox) -> float:
    """Percentage of replicates whose (energy, mean D%) falls inside ``box``.

    Entries may be reports or plain ``(energy, discomfort_percent)`` pairs.
    """
    if not reports:
        raise ValueError("need at least one replicate")
    inside = 0
    for r in reports:
        e, d = (r.energy, r.mean_discomfort_percent) if isinstance(r, AnalysisReport) else r
        inside += box.contains(e, d)
    return 100.0 * inside / len(reports)


def analyse(power_series, temperatures, fan_speed, occupancy, tau: float,
            coeffs: PmvCoeffs, band: ComfortBand) -> AnalysisReport:
    """Metrics for one run. Arrays are (n_t, rooms); occupancy is the true occupancy.

    Discomfort is only accrued at occupied instants.
    """
    temps = np.asarray(temperatures, dtype=float)
    occ = np.asarray(occupancy)
    p = pmv(temps, np.asarray(fan_speed, dtype=float), coeffs)
    d = np.where(occ == 1, discomfort(p, band.pmv_lower, band.pmv_upper), 0.0)
    per_room = []
    for j in range(temps.shape[1]):
        try:
            per_room.append(discomfort_percent(d[:, j], occ[:, j]))
        except NeverOccupied:
            per_room.append(np.nan)
    return AnalysisReport(energy(power_series, tau), p, d, np.array(per_room))
