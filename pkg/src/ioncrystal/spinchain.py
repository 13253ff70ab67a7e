"""
Walking-wave spin-spin couplings in a uniform ion chain.

Frequencies are in units of the radial trap frequency omega_x.  The force
enters through the dimensionless f = F x0 / (hbar omega_x), with x0 the
ground-state size sqrt(hbar / 2 m omega_x), so that

    J_jk = sum_n 2 f^2 M_jn M_kn / (omega_n delta_n),    delta_n = omega_n - omega_L.

The Coulomb matrix K_jk = 1/|j-k|^3 (j != k) has K_jj = -sum_k K_jk, so
radial modes soften below omega_x and the center-of-mass mode stays at
omega_x.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

CARRIER_FLAG = 0.1


class UnstableChainError(ArithmeticError):
    """Some radial mode has omega_n^2 <= 0."""


class BlueDetunedError(ValueError):
    """The laser frequency lies above at least one mode."""


@dataclass(frozen=True)
class ChainSpec:
    """Uniform chain driven on the red side of the whole radial band.

    Attributes
    ----------
    n_ions : int
    beta_x : float
        e^2 / (m d0^3 omega_x^2).
    detuning : float
        omega_x - omega_L in units of omega_x.
    force : float
        F x0 / (hbar omega_x).
    """

    n_ions: int
    beta_x: float
    detuning: float
    force: float = 0.01

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError("n_ions must be a positive integer")
        if not self.beta_x > 0:
            raise ValueError("beta_x must be positive")
        if not self.detuning > 0:
            raise ValueError("detuning must be positive")
        if self.force < 0:
            raise ValueError("force must be non-negative")

    @property
    def omega_L(self) -> float:
        return 1.0 - self.detuning


@dataclass(frozen=True)
class ChainModes:
    omegas: np.ndarray
    M: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class ChainCouplings:
    J: np.ndarray
    eta_sq: float


def coulomb_matrix(n: int) -> np.ndarray:
    """K with unit off-diagonal 1/|j-k|^3 and zero row sums."""
    j = np.arange(n)
    r = np.abs(j[:, None] - j[None, :]).astype(float)
    off = np.zeros_like(r)
    mask = r > 0
    off[mask] = 1.0 / r[mask] ** 3
    return off - np.diag(off.sum(axis=1))


def chain_normal_modes(spec: ChainSpec) -> ChainModes:
    """Radial modes omega_n = sqrt(1 + beta_x V_n) with V_n the eigenvalues of K."""
    V, M = np.linalg.eigh(coulomb_matrix(spec.n_ions))
    # eigh returns the COM eigenvalue as round-off around 0; it is exactly 0
    com = int(np.argmax(np.abs(M.sum(axis=0))))
    V[com] = 0.0
    M[:, com] = 1.0 / math.sqrt(spec.n_ions)
    w2 = 1.0 + spec.beta_x * V
    if np.any(w2 <= 0):
        raise UnstableChainError(f"unstable chain: 1 + beta_x min(V) = {w2.min():.3g}")
    # fix the eigenvector sign so that the largest component is positive
    idx = np.argmax(np.abs(M), axis=0)
    M = M * np.sign(M[idx, np.arange(M.shape[1])])
    return ChainModes(omegas=np.sqrt(w2), M=M, V=V)


def mode_detunings(spec: ChainSpec, modes: ChainModes) -> np.ndarray:
    delta = modes.omegas - spec.omega_L
    if np.any(delta <= 0):
        raise BlueDetunedError("blue-detuned mode: omega_L must lie below every omega_n")
    return delta


def effective_couplings(spec: ChainSpec, modes: ChainModes | None = None) -> ChainCouplings:
    """Spin-spin coupling matrix in units of omega_x."""
    if modes is None:
        modes = chain_normal_modes(spec)
    delta = mode_detunings(spec, modes)
    weights = 2.0 * spec.force ** 2 / (modes.omegas * delta)
    J = (modes.M * weights) @ modes.M.T
    J = 0.5 * (J + J.T)
    return ChainCouplings(J=J, eta_sq=simulation_error(spec, modes)["eta_sq_ion"])


def dipolar_reference(spec: ChainSpec, detuning_correction: bool = False) -> np.ndarray:
    """Stiff-limit couplings -beta_x (f/Delta)^2 / |j-k|^3, zero on the diagonal.

    Expanding to first order in beta_x gives an extra factor (1 + Delta),
    which the closed form drops for Delta << 1; ``detuning_correction``
    restores it.
    """
    n = spec.n_ions
    j = np.arange(n)
    r = np.abs(j[:, None] - j[None, :]).astype(float)
    ref = np.zeros((n, n))
    mask = r > 0
    amp = spec.beta_x * (spec.force / spec.detuning) ** 2
    if detuning_correction:
        amp *= 1.0 + spec.detuning
    ref[mask] = -amp / r[mask] ** 3
    return ref


def interior_pairs(n: int, max_sep: int = 5, margin: int | None = None) -> list[tuple[int, int]]:
    """Pairs (j, k), j < k <= j + max_sep, with both ions ``margin`` sites from the ends."""
    if margin is None:
        margin = max_sep
    lo, hi = margin, n - 1 - margin
    return [(j, k) for j in range(lo, hi + 1) for k in range(j + 1, min(j + max_sep, hi) + 1)]


def cube_law_fit(J: np.ndarray, pairs) -> tuple[float, float]:
    """Best single amplitude A in J_jk = A/|j-k|^3 and the max relative deviation.

    A minimizes the largest relative deviation, so it is the midpoint of the
    extreme values of J_jk |j-k|^3.
    """
    if not pairs:
        raise ValueError("no pairs to fit")
    scaled = np.array([J[j, k] * abs(j - k) ** 3 for j, k in pairs])
    lo, hi = scaled.min(), scaled.max()
    amp = 0.5 * (lo + hi)
    return float(amp), float(np.max(np.abs(scaled / amp - 1.0)))


def deviation_table(J: np.ndarray, ref: np.ndarray, max_sep: int = 5) -> list[dict]:
    """Per-separation extremes of J/ref - 1 over the interior pairs."""
    n = J.shape[0]
    rows = []
    for s in range(1, max_sep + 1):
        pairs = [(j, k) for j, k in interior_pairs(n, max_sep) if k - j == s]
        if not pairs:
            continue
        rel = np.array([J[j, k] / ref[j, k] - 1.0 for j, k in pairs])
        rows.append({"separation": s, "pairs": len(pairs), "min_rel_dev": float(rel.min()),
                     "max_rel_dev": float(rel.max())})
    return rows


def simulation_error(spec: ChainSpec, modes: ChainModes | None = None) -> dict:
    """Phonon-displacement error estimates.

    ``eta_sq_printed`` is the closed-form estimate f^2 / Delta, kept as
    written even though it carries a frequency dimension.
    ``eta_sq_ion`` = max_j sum_n |eta_n|^2 for a single flipped spin, with
    eta_n = f M_jn / (sqrt(omega_n) delta_n); it tends to (f/Delta)^2 in the
    stiff limit.  ``eta_sq_mode`` is max_n |eta_n|^2 for the worst spin
    configuration, where |g_n| = f sum_j |M_jn| / sqrt(omega_n).
    """
    if modes is None:
        modes = chain_normal_modes(spec)
    delta = mode_detunings(spec, modes)
    f2 = spec.force ** 2
    per_mode = f2 / (modes.omegas * delta ** 2)
    ion = float(np.max((modes.M ** 2) @ per_mode))
    worst = float(np.max(per_mode * np.abs(modes.M).sum(axis=0) ** 2))
    return {"eta_sq_printed": f2 / spec.detuning, "eta_sq_ion": ion, "eta_sq_mode": worst}


def carrier_correction_bound(rabi: float, omega_L: float) -> tuple[float, bool]:
    """Relative size Omega/omega_L of the carrier corrections and a regime flag."""
    if not omega_L > 0:
        raise ValueError("omega_L must be positive")
    if rabi < 0:
        raise ValueError("Rabi frequency must be non-negative")
    bound = rabi / omega_L
    return bound, bound >= CARRIER_FLAG


def write_matrix_csv(path, J: np.ndarray, spec: ChainSpec) -> None:
    """Row-major matrix with a comment header carrying the chain parameters."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# n={spec.n_ions} beta_x={spec.beta_x!r} detuning={spec.detuning!r} force={spec.force!r}\n")
        w = csv.writer(fh)
        for row in J:
            w.writerow([f"{x:.15g}" for x in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return np.array([[float(x) for x in r] for r in rows])


def chain_report(spec: ChainSpec) -> dict:
    """Modes, couplings, reference and deviations as plain JSON-ready data."""
    modes = chain_normal_modes(spec)
    cpl = effective_couplings(spec, modes)
    ref = dipolar_reference(spec)
    pairs = interior_pairs(spec.n_ions)
    report = {
        "n_ions": spec.n_ions,
        "beta_x": spec.beta_x,
        "detuning": spec.detuning,
        "force": spec.force,
        "omegas": modes.omegas.tolist(),
        "J": cpl.J.tolist(),
        "reference": ref.tolist(),
        "errors": simulation_error(spec, modes),
        "deviations": deviation_table(cpl.J, ref) if pairs else [],
    }
    if pairs:
        amp, dev = cube_law_fit(cpl.J, pairs)
        ref_amp = ref[pairs[0][0], pairs[0][0] + 1]
        report["cube_law"] = {"amplitude": amp, "max_rel_dev": dev,
                              "amplitude_over_reference": amp / ref_amp if ref_amp else math.nan}
    return report


def write_report_json(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
