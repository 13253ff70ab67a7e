"""
Periodic triangular lattice geometry.

Positions are measured in units of the lattice spacing d0.  A site is
labelled by fractional coordinates (r1, r2) with r_i in 1..L and sits at
``r1*a1 + r2*a2``.  Periodic images are resolved with the minimum-image
convention on the L x L torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import constants

SQRT3 = math.sqrt(3.0)

A1 = np.array([1.0, 0.0, 0.0])
A2 = np.array([0.5, SQRT3 / 2.0, 0.0])
B1 = np.array([1.0, -1.0 / SQRT3, 0.0])
B2 = np.array([0.0, 2.0 / SQRT3, 0.0])

# e^2 in SI units, i.e. q^2/(4 pi eps0) for a singly charged ion
COULOMB_E2 = constants.e ** 2 / (4.0 * math.pi * constants.epsilon_0)
BE9_MASS = 9.012182 * constants.atomic_mass


@dataclass(frozen=True)
class LatticeSpec:
    """Triangular lattice of L x L sites with periodic boundaries."""

    L: int
    a1: np.ndarray = field(default_factory=lambda: A1.copy(), repr=False)
    a2: np.ndarray = field(default_factory=lambda: A2.copy(), repr=False)
    b1: np.ndarray = field(default_factory=lambda: B1.copy(), repr=False)
    b2: np.ndarray = field(default_factory=lambda: B2.copy(), repr=False)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"lattice size must be a positive integer, got {self.L!r}")

    @property
    def n_sites(self) -> int:
        return self.L * self.L

    def cartesian(self, r1, r2) -> np.ndarray:
        return np.multiply.outer(r1, self.a1) + np.multiply.outer(r2, self.a2)


@dataclass(frozen=True)
class PhysicalParams:
    """Ion species, trap frequencies (ordinary Hz) and temperature (K)."""

    ion_mass: float = BE9_MASS
    ion_charge: float = constants.e
    f_xy: float = 20e3
    f_z: float = 1e6
    temperature: float = 1e-3

    def __post_init__(self):
        for name in ("ion_mass", "ion_charge", "f_xy", "f_z"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.temperature >= 0:
            raise ValueError("temperature must be non-negative")

    @property
    def omega_xy(self) -> float:
        return 2.0 * math.pi * self.f_xy

    @property
    def omega_z(self) -> float:
        return 2.0 * math.pi * self.f_z

    @property
    def wz_ratio(self) -> float:
        """omega_z / omega_xy."""
        return self.f_z / self.f_xy

    @property
    def e2(self) -> float:
        return self.ion_charge ** 2 / (4.0 * math.pi * constants.epsilon_0)

    def with_temperature(self, temperature: float) -> "PhysicalParams":
        return PhysicalParams(self.ion_mass, self.ion_charge, self.f_xy, self.f_z, temperature)


def standard_parameter_set(which: int, temperature: float = 1e-3) -> PhysicalParams:
    """The two Be+ trap settings: 1 -> 20 kHz / 1 MHz, 2 -> 200 kHz / 10 MHz."""
    if which == 1:
        return PhysicalParams(f_xy=20e3, f_z=1e6, temperature=temperature)
    if which == 2:
        return PhysicalParams(f_xy=200e3, f_z=10e6, temperature=temperature)
    raise ValueError(f"unknown parameter set {which!r}; expected 1 or 2")


@dataclass(frozen=True)
class LatticeSums:
    C1: float
    C2: float
    beta_xy: float
    L: int


@dataclass(frozen=True)
class DerivedScales:
    """Length and stiffness scales of the crystal."""

    d0: float
    beta_xy: float
    beta_z: float
    X0: float
    Z0: float
    x_ratio: float
    z_ratio: float
    # hbar*omega/(k_B*T) for the in-plane and axial trap frequencies
    theta_xy: float
    theta_z: float


def generate_sites(L: int) -> np.ndarray:
    """Fractional coordinates of all L^2 sites, shape (L^2, 2), values in 1..L."""
    if int(L) != L or L < 1:
        raise ValueError(f"lattice size must be a positive integer, got {L!r}")
    r = np.arange(1, L + 1)
    r1, r2 = np.meshgrid(r, r, indexing="ij")
    return np.stack([r1.ravel(), r2.ravel()], axis=1)


def _norm2_frac(m1, m2):
    # |m1 a1 + m2 a2|^2 is an integer for integer m
    return m1 * m1 + m1 * m2 + m2 * m2


_OFFSETS = [(o1, o2) for o1 in (-1, 0, 1) for o2 in (-1, 0, 1)]  # lexicographic


def min_image_fractional(r, s, L: int) -> tuple[int, int]:
    """Integer fractional displacement of the nearest periodic image of r - s.

    The raw difference is first reduced to [0, L)^2, then the nine offsets
    {-L, 0, L}^2 are tried.  Ties in length go to the lexicographically
    smallest offset.
    """
    d1 = (int(r[0]) - int(s[0])) % L
    d2 = (int(r[1]) - int(s[1])) % L
    best = None
    for o1, o2 in _OFFSETS:
        m1, m2 = d1 + o1 * L, d2 + o2 * L
        n2 = _norm2_frac(m1, m2)
        if best is None or n2 < best[0]:
            best = (n2, m1, m2)
    return best[1], best[2]


def min_image(r, s, L: int) -> np.ndarray:
    """Shortest Cartesian displacement R_r - R_s on the torus, in units of d0."""
    m1, m2 = min_image_fractional(r, s, L)
    return m1 * A1 + m2 * A2


@lru_cache(maxsize=16)
def _min_image_table(L: int) -> tuple[np.ndarray, np.ndarray]:
    d = np.arange(L)
    d1, d2 = np.meshgrid(d, d, indexing="ij")
    best_n2 = np.full(d1.shape, np.iinfo(np.int64).max, dtype=np.int64)
    m1 = np.zeros_like(d1)
    m2 = np.zeros_like(d2)
    for o1, o2 in _OFFSETS:
        c1, c2 = d1 + o1 * L, d2 + o2 * L
        n2 = _norm2_frac(c1, c2)
        better = n2 < best_n2  # strict: earlier offsets win ties
        best_n2 = np.where(better, n2, best_n2)
        m1 = np.where(better, c1, m1)
        m2 = np.where(better, c2, m2)
    m1.setflags(write=False)
    m2.setflags(write=False)
    return m1, m2


def min_image_table(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-image fractional displacements for every reduced offset.

    Returns integer arrays ``(m1, m2)`` of shape (L, L); entry [d1, d2] is
    the image of the offset (d1, d2) mod L.  Entry [0, 0] is the origin.
    """
    if L < 1:
        raise ValueError("L must be positive")
    return _min_image_table(int(L))


def displacement_table(L: int) -> np.ndarray:
    """Cartesian minimum-image displacements, shape (L, L, 3)."""
    m1, m2 = min_image_table(L)
    return np.multiply.outer(m1, A1) + np.multiply.outer(m2, A2)


def lattice_sums(L: int) -> LatticeSums:
    """C1 = sum |R_s|^2 and C2 = sum 1/|R_s| over all non-origin minimum images."""
    if int(L) != L or L < 2:
        raise ValueError("lattice sums need L >= 2")
    m1, m2 = min_image_table(L)
    n2 = _norm2_frac(m1, m2).ravel()[1:].astype(float)
    n2.sort()
    # ascending distance, correctly rounded sums
    C1 = math.fsum(n2)
    C2 = math.fsum(1.0 / np.sqrt(n2))
    return LatticeSums(C1=C1, C2=C2, beta_xy=4.0 * C1 / (L * L * C2), L=int(L))


def physical_spacing(params: PhysicalParams, sums: LatticeSums) -> float:
    """Lattice constant d0 in metres from beta_xy = 2 e^2 / (m omega_xy^2 d0^3)."""
    return (2.0 * params.e2 / (params.ion_mass * params.omega_xy ** 2 * sums.beta_xy)) ** (1.0 / 3.0)


def derived_betas(params: PhysicalParams, sums: LatticeSums) -> DerivedScales:
    """Axial stiffness beta_z, oscillator lengths and thermal ratios."""
    m = params.ion_mass
    d0 = physical_spacing(params, sums)
    beta_z = params.e2 / (m * params.omega_z ** 2 * d0 ** 3)
    X0 = math.sqrt(constants.hbar / (2.0 * m * params.omega_xy))
    Z0 = math.sqrt(constants.hbar / (2.0 * m * params.omega_z))
    kT = constants.k * params.temperature
    theta = (lambda w: math.inf if kT == 0 else constants.hbar * w / kT)
    return DerivedScales(
        d0=d0,
        beta_xy=sums.beta_xy,
        beta_z=beta_z,
        X0=X0,
        Z0=Z0,
        x_ratio=X0 / d0,
        z_ratio=Z0 / d0,
        theta_xy=theta(params.omega_xy),
        theta_z=theta(params.omega_z),
    )
