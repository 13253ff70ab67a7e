"""
Gate errors from the in-plane bath as a function of temperature.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..lattice import PhysicalParams, derived_betas, lattice_sums
from ..phonons import Crystal
from .lattice_terms import ErrorBreakdown, coupling_scales, error_breakdown, inplane_modes

SCAN_COLUMNS = ("T_K", "E1_re", "E1_im", "E2_re", "E2_im", "E3_re", "E3_im", "E4_re", "E4_im",
                "Fbar_re", "Fbar_im", "E", "Eprime")


@dataclass(frozen=True)
class ScanResult:
    params: PhysicalParams
    L: int
    gamma_xy: float
    x_ratio: float
    method: str
    points: tuple[ErrorBreakdown, ...]

    @property
    def temperatures(self) -> np.ndarray:
        return np.array([p.temperature for p in self.points])

    @property
    def errors(self) -> np.ndarray:
        return np.array([p.error_E for p in self.points])

    @property
    def errors_prime(self) -> np.ndarray:
        return np.array([p.error_Eprime for p in self.points])


def log_temperatures(T_min: float, T_max: float, points: int) -> np.ndarray:
    if not (0 < T_min <= T_max):
        raise ValueError("temperatures must satisfy 0 < T_min <= T_max")
    if points < 1:
        raise ValueError("need at least one temperature")
    if points == 1:
        return np.array([float(T_max)])
    return np.geomspace(T_min, T_max, points)


def temperature_scan(params: PhysicalParams, L: int, gamma_xy: float, T_min: float, T_max: float,
                     points: int, method: str = "high_t", threads: int | None = None,
                     x_ratio: float | None = None) -> ScanResult:
    """Evaluate E1..E4, Fbar, E and E' on log-spaced temperatures.

    The couplings use the sign-gate scales at pulse rate ``gamma_xy``
    (units omega_xy).  ``x_ratio`` defaults to X0/d0 of the crystal at
    ``params.temperature``.
    """
    if not gamma_xy > 0:
        raise ValueError("gamma_xy must be positive")
    temps = log_temperatures(T_min, T_max, points)
    if x_ratio is None:
        x_ratio = derived_betas(params, lattice_sums(L)).x_ratio
    scales = coupling_scales(x_ratio, gamma_xy)
    base = inplane_modes(Crystal.from_params(params, L), params)
    rows = tuple(error_breakdown(base.at_temperature(float(T)), scales, method, threads) for T in temps)
    return ScanResult(params, L, float(gamma_xy), float(x_ratio), method, rows)


def scan_rows(result: ScanResult) -> list[list[float]]:
    rows = []
    for p in result.points:
        rows.append([p.temperature, p.E1.real, p.E1.imag, p.E2.real, p.E2.imag, p.E3.real, p.E3.imag,
                     p.E4.real, p.E4.imag, p.F_bar_xy.real, p.F_bar_xy.imag, p.error_E, p.error_Eprime])
    return rows


def write_scan_csv(result: ScanResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCAN_COLUMNS)
        for row in scan_rows(result):
            w.writerow([f"{x:.15g}" for x in row])


def read_scan_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def summary_stats(result: ScanResult) -> dict:
    """Log-log slope of E over the upper decade and the largest E'/E."""
    T, E, Ep = result.temperatures, result.errors, result.errors_prime
    upper = T >= T.max() / 10.0
    slope = math.nan
    if np.count_nonzero(upper) >= 2 and np.all(E[upper] > 0):
        slope = float(np.polyfit(np.log(T[upper]), np.log(E[upper]), 1)[0])
    ratio = Ep / np.where(E > 0, E, np.nan)
    return {"loglog_slope_upper_decade": slope,
            "max_Eprime_over_E": float(np.nanmax(ratio)) if np.any(np.isfinite(ratio)) else math.nan,
            "max_Eprime_over_E_upper_decade": (float(np.nanmax(ratio[upper]))
                                               if np.any(np.isfinite(ratio[upper])) else math.nan),
            "max_E": float(E.max())}


def scan_to_dict(result: ScanResult) -> dict:
    return {
        "params": asdict(result.params),
        "L": result.L,
        "gamma_over_omega_xy": result.gamma_xy,
        "x_ratio": result.x_ratio,
        "method": result.method,
        "columns": list(SCAN_COLUMNS),
        "rows": scan_rows(result),
        "summary": summary_stats(result),
    }


def write_scan_json(result: ScanResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(scan_to_dict(result), fh, indent=2)
