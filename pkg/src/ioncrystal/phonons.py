"""
Harmonic phonons of the planar crystal.

All frequencies are in units of the in-plane trap frequency omega_xy and
the dynamical matrix is in units of omega_xy^2.  The Coulomb part of the
dynamical matrix for every grid wavevector is obtained at once from a 2D
FFT of the pair tensors on the minimum-image table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import constants

from .lattice import A1, A2, B1, B2, PhysicalParams, lattice_sums, min_image_table

AXIAL = "axial"
LONGITUDINAL = "longitudinal"
TRANSVERSE = "transverse"
BRANCHES = (AXIAL, LONGITUDINAL, TRANSVERSE)

# clamp window for slightly negative eigenvalues (units of omega_xy^2)
EIG_TOL = 1e-9


class UnstableCrystalError(ArithmeticError):
    """A squared frequency is negative beyond round-off."""


@dataclass(frozen=True)
class WaveVector:
    """Grid wavevector q = q1 b1 + q2 b2 with q_i = 2 pi n_i / L."""

    n1: int
    n2: int
    L: int

    def __post_init__(self):
        object.__setattr__(self, "n1", int(self.n1) % self.L)
        object.__setattr__(self, "n2", int(self.n2) % self.L)

    @property
    def q1(self) -> float:
        return 2.0 * math.pi * self.n1 / self.L

    @property
    def q2(self) -> float:
        return 2.0 * math.pi * self.n2 / self.L

    @property
    def is_zero(self) -> bool:
        return self.n1 == 0 and self.n2 == 0

    def __neg__(self) -> "WaveVector":
        return WaveVector(-self.n1, -self.n2, self.L)

    def reduced(self) -> tuple[int, int]:
        """Integer representative closest to the zone centre."""
        return reduced_index(self.n1, self.n2, self.L)

    def cartesian(self) -> np.ndarray:
        m1, m2 = self.reduced()
        return 2.0 * math.pi / self.L * (m1 * B1 + m2 * B2)


def reduced_index(n1, n2, L):
    """Shift (n1, n2) by multiples of L to minimise |n1 b1 + n2 b2|."""
    n1 = np.asarray(n1) % L
    n2 = np.asarray(n2) % L
    best = None
    out1, out2 = n1, n2
    for o1 in (-1, 0, 1):
        for o2 in (-1, 0, 1):
            c1, c2 = n1 + o1 * L, n2 + o2 * L
            # |c1 b1 + c2 b2|^2 = (4/3)(c1^2 - c1 c2 + c2^2)
            nn = c1 * c1 - c1 * c2 + c2 * c2
            if best is None:
                best, out1, out2 = nn, c1, c2
            else:
                better = nn < best
                best = np.where(better, nn, best)
                out1 = np.where(better, c1, out1)
                out2 = np.where(better, c2, out2)
    if np.ndim(out1) == 0:
        return int(out1), int(out2)
    return out1, out2


@dataclass(frozen=True)
class PhononMode:
    q: WaveVector
    branch: str
    omega: float
    evec: np.ndarray
    n_occ: float = 0.0


@dataclass(frozen=True)
class BandStructure:
    path: tuple
    axial: np.ndarray
    longitudinal: np.ndarray
    transverse: np.ndarray

    def __post_init__(self):
        if not (len(self.path) == len(self.axial) == len(self.longitudinal) == len(self.transverse)):
            raise ValueError("band structure sequences must have equal length")

    @property
    def branches(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.axial, self.longitudinal, self.transverse


def pair_tensor(s) -> np.ndarray:
    """Dipole pair tensor V_s = (3 s s^T / |s|^2 - 1) / |s|^3."""
    s = np.asarray(s, dtype=float)
    r2 = float(s @ s)
    if r2 == 0.0:
        raise ValueError("pair tensor is undefined for zero displacement")
    r = math.sqrt(r2)
    return (3.0 * np.outer(s, s) / r2 - np.eye(3)) / (r2 * r)


class Crystal:
    """Periodic L x L crystal with frequency ratio omega_z/omega_xy.

    Parameters
    ----------
    L : int
        Linear size of the lattice.
    wz_ratio : float
        Axial over in-plane trap frequency.
    beta_xy : float, optional
        Coulomb stiffness.  Computed from the minimum-image lattice sums
        when omitted.
    """

    def __init__(self, L: int, wz_ratio: float, beta_xy: float | None = None):
        if L < 2:
            raise ValueError("crystal needs L >= 2")
        if not wz_ratio > 0:
            raise ValueError("wz_ratio must be positive")
        self.L = int(L)
        self.wz_ratio = float(wz_ratio)
        self.beta_xy = lattice_sums(L).beta_xy if beta_xy is None else float(beta_xy)

    @classmethod
    def from_params(cls, params: PhysicalParams, L: int) -> "Crystal":
        return cls(L, params.wz_ratio)

    def __repr__(self):
        return f"Crystal(L={self.L}, wz_ratio={self.wz_ratio}, beta_xy={self.beta_xy:.6g})"

    @cached_property
    def _pair_tensors(self) -> np.ndarray:
        m1, m2 = min_image_table(self.L)
        s = np.multiply.outer(m1, A1) + np.multiply.outer(m2, A2)
        r2 = np.einsum("abi,abi->ab", s, s)
        r2[0, 0] = 1.0
        V = (3.0 * np.einsum("abi,abj->abij", s, s) / r2[..., None, None] - np.eye(3)) / r2[..., None, None] ** 1.5
        V[0, 0] = 0.0
        return V

    @cached_property
    def coulomb_table(self) -> np.ndarray:
        """Sum_s (1 - cos q.s) V_s for every grid q, shape (L, L, 3, 3)."""
        V = self._pair_tensors
        cos_part = np.fft.fft2(V, axes=(0, 1)).real
        table = V.sum(axis=(0, 1)) - cos_part
        table = 0.5 * (table + np.swapaxes(table, -1, -2))
        # in-plane s has no z components, so the z row is exactly decoupled
        table[..., :2, 2] = 0.0
        table[..., 2, :2] = 0.0
        table.setflags(write=False)
        return table

    @cached_property
    def dynamical_table(self) -> np.ndarray:
        """Omega_q for the whole grid, indexed [n1, n2], units omega_xy^2."""
        D = 0.5 * self.beta_xy * self.coulomb_table
        D = D + np.diag([1.0, 1.0, self.wz_ratio ** 2])
        D.setflags(write=False)
        return D

    def dynamical_matrix(self, q: WaveVector) -> np.ndarray:
        self._check_q(q)
        return np.array(self.dynamical_table[q.n1, q.n2])

    def dynamical_matrix_direct(self, q: WaveVector) -> np.ndarray:
        """Real-space sum over every site, without the FFT table."""
        self._check_q(q)
        from .lattice import generate_sites, min_image_fractional

        acc = np.zeros((3, 3))
        origin = (self.L, self.L)
        for site in generate_sites(self.L):
            m1, m2 = min_image_fractional(site, origin, self.L)
            if m1 == 0 and m2 == 0:
                continue
            phase = q.q1 * m1 + q.q2 * m2
            acc += (1.0 - math.cos(phase)) * pair_tensor(m1 * A1 + m2 * A2)
        return np.diag([1.0, 1.0, self.wz_ratio ** 2]) + 0.5 * self.beta_xy * acc

    def _check_q(self, q: WaveVector):
        if q.L != self.L:
            raise ValueError(f"wavevector belongs to L={q.L}, crystal has L={self.L}")

    def modes(self, q: WaveVector, params: PhysicalParams | None = None) -> list[PhononMode]:
        return diagonalize_modes(self.dynamical_matrix(q), q, params)

    @cached_property
    def grid(self) -> "ModeGrid":
        return mode_grid(self)


def classify_branch(q: WaveVector | None, evec) -> str:
    """Axial / longitudinal / transverse label of a polarisation vector."""
    evec = np.asarray(evec, dtype=float)
    if abs(evec[2]) > 1.0 / math.sqrt(2.0):
        return AXIAL
    if q is None or q.is_zero:
        raise ValueError("in-plane labels at q = 0 are assigned by frequency order")
    qc = q.cartesian()[:2]
    qhat = qc / np.linalg.norm(qc)
    qperp = np.array([-qhat[1], qhat[0]])
    e = evec[:2]
    return LONGITUDINAL if abs(qhat @ e) >= abs(qperp @ e) else TRANSVERSE


def _eig_checked(Omega: np.ndarray):
    w2, vecs = np.linalg.eigh(Omega)
    if np.any(w2 < -EIG_TOL):
        raise UnstableCrystalError(f"unstable crystal: squared frequency {w2.min():.3e} < 0")
    return np.sqrt(np.clip(w2, 0.0, None)), vecs


def diagonalize_modes(Omega, q: WaveVector | None = None, params: PhysicalParams | None = None) -> list[PhononMode]:
    """Three modes of a 3x3 dynamical matrix, ascending in frequency."""
    Omega = np.asarray(Omega, dtype=float)
    if not np.allclose(Omega, Omega.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Omega).max())):
        raise ValueError("dynamical matrix must be symmetric")
    omega, vecs = _eig_checked(Omega)
    labels = [None] * 3
    inplane = []
    for i in range(3):
        if abs(vecs[2, i]) > 1.0 / math.sqrt(2.0):
            labels[i] = AXIAL
        else:
            inplane.append(i)
    if q is None or q.is_zero:
        # frequency order: lower in-plane mode is called longitudinal
        for i, name in zip(inplane, (LONGITUDINAL, TRANSVERSE)):
            labels[i] = name
    else:
        for i in inplane:
            labels[i] = classify_branch(q, vecs[:, i])
    out = []
    for i in range(3):
        n = float(occupation(omega[i], params)) if params is not None else 0.0
        out.append(PhononMode(q=q, branch=labels[i], omega=float(omega[i]), evec=vecs[:, i].copy(), n_occ=n))
    return out


def occupation(omega, params: PhysicalParams | float, omega_xy: float | None = None):
    """Bose-Einstein occupation of a mode with frequency ``omega`` (units omega_xy).

    ``params`` is either a :class:`PhysicalParams` or a temperature in kelvin,
    in which case ``omega_xy`` (rad/s) is required.
    """
    if isinstance(params, PhysicalParams):
        T, wxy = params.temperature, params.omega_xy
    else:
        if omega_xy is None:
            raise ValueError("omega_xy is required when a bare temperature is given")
        T, wxy = float(params), float(omega_xy)
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("occupation needs positive frequencies")
    if T == 0:
        return np.zeros_like(omega)
    x = constants.hbar * omega * wxy / (constants.k * T)
    return 1.0 / np.expm1(x)


@dataclass(frozen=True)
class ModeGrid:
    """Mode table on the full grid.

    ``omega_axial`` has shape (L, L).  ``omega_inplane`` has shape (L, L, 2)
    and ``evec_inplane`` (L, L, 2, 2) holds the in-plane polarisation
    vectors as columns, ascending in frequency.
    """

    L: int
    omega_axial: np.ndarray
    omega_inplane: np.ndarray
    evec_inplane: np.ndarray

    @property
    def max_inplane(self) -> float:
        return float(self.omega_inplane.max())

    @property
    def min_axial(self) -> float:
        return float(self.omega_axial.min())


def mode_grid(crystal: Crystal) -> ModeGrid:
    D = crystal.dynamical_table
    wz2 = D[..., 2, 2]
    if np.any(wz2 < -EIG_TOL):
        raise UnstableCrystalError("unstable crystal: axial branch")
    w2, vecs = np.linalg.eigh(np.ascontiguousarray(D[..., :2, :2]))
    if np.any(w2 < -EIG_TOL):
        raise UnstableCrystalError(f"unstable crystal: squared frequency {w2.min():.3e} < 0")
    # fix the sign of each polarisation vector so results do not depend on LAPACK
    idx = np.argmax(np.abs(vecs), axis=-2)[..., None, :]
    sign = np.sign(np.take_along_axis(vecs, idx, axis=-2))
    vecs = vecs * sign
    return ModeGrid(
        L=crystal.L,
        omega_axial=np.sqrt(np.clip(wz2, 0.0, None)),
        omega_inplane=np.sqrt(np.clip(w2, 0.0, None)),
        evec_inplane=vecs,
    )


def x_direction_path(L: int) -> list[WaveVector]:
    """Grid wavevectors along q || x from the zone centre, q_x in [0, 2 pi]."""
    # q1 b1 + q2 b2 is along x when q1 = 2 q2
    return [WaveVector(2 * m, m, L) for m in range(L // 2 + 1)]


def _as_wavevector(p, L: int) -> WaveVector:
    if isinstance(p, WaveVector):
        if p.L != L:
            raise ValueError("path point belongs to another lattice size")
        return p
    n = np.asarray(p, dtype=float)
    if n.shape != (2,) or np.any(np.abs(n - np.round(n)) > 1e-9):
        raise ValueError(f"path point {p!r} is not on the wavevector grid")
    return WaveVector(int(round(n[0])), int(round(n[1])), L)


def _branch_frequencies(crystal: Crystal, q: WaveVector):
    modes = crystal.modes(q)
    by = {m.branch: m.omega for m in modes}
    if len(by) != 3:
        # two in-plane modes with the same label: fall back to frequency order
        inplane = sorted(m.omega for m in modes if m.branch != AXIAL)
        ax = [m.omega for m in modes if m.branch == AXIAL]
        if len(ax) != 1 or len(inplane) != 2:
            raise UnstableCrystalError("cannot separate axial and in-plane branches")
        by = {AXIAL: ax[0], LONGITUDINAL: inplane[0], TRANSVERSE: inplane[1]}
    return by[AXIAL], by[LONGITUDINAL], by[TRANSVERSE]


def band_structure(path: Iterable, crystal: Crystal) -> BandStructure:
    """Sample the three branches along ``path`` (grid wavevectors or (n1, n2) pairs)."""
    qs = tuple(_as_wavevector(p, crystal.L) for p in path)
    freqs = np.array([_branch_frequencies(crystal, q) for q in qs]).reshape(-1, 3)
    return BandStructure(path=qs, axial=freqs[:, 0], longitudinal=freqs[:, 1], transverse=freqs[:, 2])


BAND_COLUMNS = ("n1", "n2", "q1", "q2", "omega_axial", "omega_long", "omega_trans")


def write_band_csv(bands: BandStructure, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BAND_COLUMNS)
        for q, a, lo, tr in zip(bands.path, bands.axial, bands.longitudinal, bands.transverse):
            w.writerow([q.n1, q.n2] + [f"{v:.12g}" for v in (q.q1, q.q2, a, lo, tr)])


def read_band_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {k: (int(v) if k in ("n1", "n2") else float(v)) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def gap_check(grid: ModeGrid) -> tuple[bool, float, float]:
    """Axial gap condition min omega_axial > 2 max omega_inplane."""
    lo, hi = grid.min_axial, grid.max_inplane
    return lo > 2.0 * hi, lo, hi


def axial_bandwidth(grid: ModeGrid) -> float:
    """Fractional width (max - min) / max of the axial band."""
    w = grid.omega_axial
    return float((w.max() - w.min()) / w.max())


def full_spectrum(grid: ModeGrid) -> Sequence[np.ndarray]:
    return grid.omega_axial, grid.omega_inplane[..., 0], grid.omega_inplane[..., 1]
