"""
Diagram sums over the in-plane phonons of the periodic crystal.

The two gate ions sit at the origin and at a1.  Their coupling to the
in-plane modes is

    f_q  = Fbar F_q / L,          F_q  = e^x_q (1 - e^{i q1})
    g_qk = Gbar G_qk / L^2,       G_qk = (e_q^T M e_k)(1 - e^{i q1})(1 - e^{i k1})

with M = diag(-3, 2) in the plane, and the partner of (q, lambda) is
(-q, lambda) with e_{-q} = e_q.  With c_q = |1 - e^{i q1}|^2 every weight
entering E1..E4 is real and separable, so each double sum is a handful
of kernel matrix-vector products.  The (a, b) sums run over fixed row
blocks; partial sums are combined in block order with correctly rounded
addition, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..lattice import PhysicalParams
from ..phonons import Crystal, ModeGrid, occupation
from .kernels import (
    autocorrelation_transform,
    pair_kernel,
    pair_kernel_quadrature,
    pulse_spectrum,
    second_order_kernel,
    triple_kernel,
)

# in-plane part of (2 delta_ij - 5 delta_ix delta_jx)
M_DIAG = (-3.0, 2.0)
BLOCK_ROWS = 256


@dataclass(frozen=True)
class CouplingScales:
    F_bar: float
    G_bar: float
    x_ratio: float
    gamma: float


def coupling_scales(x_ratio: float, gamma: float | None = None, *, beta_z: float | None = None,
                    eta0: float | None = None, wz_ratio: float | None = None) -> CouplingScales:
    """Linear and quadratic coupling scales in units of omega_xy.

    With only ``gamma`` given, the sign-gate forms
    Fbar = -(3/4) pi x Gamma and Gbar = -(3/8) pi x^2 Gamma are used.
    Passing ``beta_z``, ``eta0`` and ``wz_ratio`` selects
    Fbar = -6 beta_z eta0^2 omega_z x and Gbar = -3 beta_z eta0^2 omega_z x^2;
    ``gamma`` is then only stored.  The two coincide when
    beta_z eta0^2 omega_z = pi Gamma / 8.
    """
    if not x_ratio > 0:
        raise ValueError("x_ratio must be positive")
    if beta_z is not None or eta0 is not None or wz_ratio is not None:
        if beta_z is None or eta0 is None or wz_ratio is None:
            raise ValueError("beta_z, eta0 and wz_ratio must be given together")
        if not (beta_z > 0 and eta0 > 0 and wz_ratio > 0):
            raise ValueError("beta_z, eta0 and wz_ratio must be positive")
        s = beta_z * eta0 ** 2 * wz_ratio
        if gamma is None:
            gamma = 8.0 * s / math.pi
        return CouplingScales(-6.0 * s * x_ratio, -3.0 * s * x_ratio ** 2, x_ratio, gamma)
    if gamma is None or not gamma > 0:
        raise ValueError("gamma must be positive")
    return CouplingScales(-0.75 * math.pi * x_ratio * gamma, -0.375 * math.pi * x_ratio ** 2 * gamma,
                          x_ratio, gamma)


def structure_factor_F(q1: float, evec) -> complex:
    """F = e^x (1 - e^{i q1})."""
    return complex(evec[0] * (1.0 - np.exp(1j * q1)))


def structure_factor_G(q1: float, evec_q, k1: float, evec_k) -> complex:
    """G = sum_ij (2 delta_ij - 5 delta_ix delta_jx) e_q^i e_k^j (1 - e^{i q1})(1 - e^{i k1})."""
    m = M_DIAG[0] * evec_q[0] * evec_k[0] + M_DIAG[1] * evec_q[1] * evec_k[1]
    return complex(m * (1.0 - np.exp(1j * q1)) * (1.0 - np.exp(1j * k1)))


@dataclass(frozen=True)
class InPlaneModes:
    """Flattened table of the 2 L^2 in-plane modes.

    Attributes
    ----------
    omega, xbar2 : ndarray
        Frequency (units omega_xy) and propagator weight omega_xy/omega.
    ex, ey : ndarray
        Cartesian components of the polarisation vector.
    c2 : ndarray
        |1 - e^{i q1}|^2.
    nbar : ndarray
        Occupations at ``temperature``.
    """

    L: int
    n1: np.ndarray
    n2: np.ndarray
    omega: np.ndarray
    xbar2: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    c2: np.ndarray
    nbar: np.ndarray
    temperature: float
    omega_xy: float

    @property
    def size(self) -> int:
        return self.omega.size

    @property
    def q1(self) -> np.ndarray:
        return 2.0 * math.pi * self.n1 / self.L

    def at_temperature(self, temperature: float) -> "InPlaneModes":
        n = occupation(self.omega, temperature, self.omega_xy)
        return replace(self, nbar=np.asarray(n, dtype=float), temperature=float(temperature))

    def with_occupations(self, nbar) -> "InPlaneModes":
        nbar = np.broadcast_to(np.asarray(nbar, dtype=float), self.omega.shape).copy()
        return replace(self, nbar=nbar)

    def structure_factors_F(self) -> np.ndarray:
        return self.ex * (1.0 - np.exp(1j * self.q1))


def inplane_modes(grid: ModeGrid | Crystal, params: PhysicalParams) -> InPlaneModes:
    """Mode table at ``params.temperature`` from a mode grid or crystal."""
    if isinstance(grid, Crystal):
        grid = grid.grid
    L = grid.L
    n1, n2 = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    n1 = np.repeat(n1.ravel(), 2)
    n2 = np.repeat(n2.ravel(), 2)
    omega = grid.omega_inplane.reshape(-1)
    # a real displacement field needs e_{-q} = e_q; copy from the lower index
    m1, m2 = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    flat = m1 * L + m2
    neg = ((-m1) % L) * L + (-m2) % L
    canon = np.minimum(flat, neg).ravel()
    ev = np.swapaxes(grid.evec_inplane, -1, -2).reshape(L * L, 2, 2)[canon]  # (q, branch, component)
    ex = ev[..., 0].reshape(-1)
    ey = ev[..., 1].reshape(-1)
    c2 = 2.0 - 2.0 * np.cos(2.0 * math.pi * n1 / L)
    table = InPlaneModes(L=L, n1=n1, n2=n2, omega=omega, xbar2=1.0 / omega, ex=ex, ey=ey, c2=c2,
                         nbar=np.zeros_like(omega), temperature=0.0, omega_xy=params.omega_xy)
    return table.at_temperature(params.temperature)


def _check(gamma):
    if not gamma > 0:
        raise ValueError("gamma must be positive")


def term_E1(modes: InPlaneModes, G_bar: float, gamma: float) -> complex:
    """First order: -i (2 Gbar/Gamma) L^-2 sum G_{k,-k} xbar^2 (2n + 1); purely imaginary."""
    _check(gamma)
    w = (M_DIAG[0] * modes.ex ** 2 + M_DIAG[1] * modes.ey ** 2) * modes.c2
    s = math.fsum(w * modes.xbar2 * (2.0 * modes.nbar + 1.0))
    return complex(0.0, -2.0 * G_bar / gamma * s / modes.L ** 2)


def term_E2(modes: InPlaneModes, F_bar: float, gamma: float) -> complex:
    """Second order in the linear coupling, closed form."""
    _check(gamma)
    w = modes.ex ** 2 * modes.c2 * modes.xbar2
    k = second_order_kernel(modes.omega, modes.nbar, gamma)
    re = math.fsum(w * k.real)
    im = math.fsum(w * k.imag)
    pref = -0.5 * F_bar ** 2 / modes.L ** 2
    return complex(pref * re, pref * im)


def _blocks(n, size=BLOCK_ROWS):
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def _reduce(fn, n, threads):
    blocks = _blocks(n)
    if threads is None or threads <= 1:
        parts = [fn(a, b) for a, b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda ab: fn(*ab), blocks))
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def _e3_vectors(modes: InPlaneModes):
    # (-3 x_a x_b + 2 y_a y_b)^2 = 9 x_a^2 x_b^2 - 12 (x y)_a (x y)_b + 4 y_a^2 y_b^2
    c = modes.c2
    return ((9.0, c * modes.ex ** 2), (-12.0, c * modes.ex * modes.ey), (4.0, c * modes.ey ** 2))


def _e4_vectors(modes: InPlaneModes):
    # e_a^x e_b^x (e_a^T M e_b) = -3 (x^2)_a (x^2)_b + 2 (x y)_a (x y)_b
    c = modes.c2
    return ((M_DIAG[0], c * modes.ex ** 2), (M_DIAG[1], c * modes.ex * modes.ey))


E3_METHODS = ("high_t", "exact", "validated", "as_printed")


class ValidationError(RuntimeError):
    """The high-temperature kernel disagrees with the numerical reference."""


def validate_e3_sample(modes: InPlaneModes, gamma: float, n_pairs: int = 24, seed: int = 0,
                       n_min: float = 10.0) -> dict:
    """Check the E3 pair kernel on randomly sampled mode pairs.

    For each pair the lag integral is done by quadrature and compared with
    the closed form (tight tolerance).  For pairs with both occupations at
    least ``n_min`` the real part must also match the high-temperature
    kernel within (n_a + n_b + 1)/(n_a n_b), twice the size of the
    neglected terms.
    """
    _check(gamma)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, modes.size, size=(n_pairs, 2))
    worst_closed, worst_high, checked = 0.0, 0.0, 0
    for a, b in idx:
        args = (modes.omega[a], modes.nbar[a], modes.omega[b], modes.nbar[b], gamma)
        quad_val = pair_kernel_quadrature(*args)
        closed = complex(pair_kernel(*args))
        dev = abs(quad_val - closed) / abs(closed)
        worst_closed = max(worst_closed, dev)
        if dev > 1e-7:
            raise ValidationError(f"pair kernel quadrature disagrees with closed form by {dev:.2e}")
        na, nb = modes.nbar[a], modes.nbar[b]
        if min(na, nb) >= n_min:
            high = float(pair_kernel(*args, method="high_t"))
            rel = abs(quad_val.real - high) / high
            worst_high = max(worst_high, rel)
            checked += 1
            if rel > (na + nb + 1.0) / (na * nb):
                raise ValidationError(f"high-temperature kernel off by {rel:.2e} at n = ({na:.1f}, {nb:.1f})")
    return {"pairs": int(n_pairs), "high_t_checked": checked, "max_dev_closed_form": worst_closed,
            "max_dev_high_t": worst_high}


def term_E3(modes: InPlaneModes, G_bar: float, gamma: float, method: str = "high_t",
            threads: int | None = None) -> complex:
    """Second order in the quadratic coupling.

    ``high_t`` keeps the n_a n_b part of the contraction product, giving
    -(Gbar^2/L^4) sum W_ab xbar_a^2 xbar_b^2 n_a n_b 2[P(w_a+w_b)^2 + P(w_a-w_b)^2].
    ``exact`` uses the full finite-temperature kernel.  ``validated``
    returns the ``high_t`` value after :func:`validate_e3_sample` has passed
    on a random sample of pairs.  ``as_printed``
    drops the square on the Lorentzian; it is kept only for comparison and
    is not dimensionally consistent.
    """
    _check(gamma)
    if method not in E3_METHODS:
        raise ValueError(f"unknown E3 method {method!r}; choose from {E3_METHODS}")
    if method == "validated":
        validate_e3_sample(modes, gamma)
        method = "high_t"
    w, x2, n = modes.omega, modes.xbar2, modes.nbar
    vecs = _e3_vectors(modes)

    if method in ("high_t", "as_printed"):
        h = [(s, v * x2 * n) for s, v in vecs]

        def block(a, b):
            wa = w[a:b, None]
            ps = pulse_spectrum(wa + w[None, :], gamma)
            pd = pulse_spectrum(wa - w[None, :], gamma)
            K = 2.0 * (ps * ps + pd * pd) if method == "high_t" else 2.0 * (ps + pd)
            return complex(sum(s * float(v[a:b] @ (K @ v)) for s, v in h))
    else:
        hp = [(s, v * x2 * (n + 1.0), v * x2 * n) for s, v in vecs]

        def block(a, b):
            wa = w[a:b, None]
            cs = autocorrelation_transform(wa + w[None, :], gamma)
            cd = autocorrelation_transform(wa - w[None, :], gamma)
            tot = 0j
            for s, p, m in hp:
                tot += s * (p[a:b] @ (cs @ p) + p[a:b] @ (cd @ m)
                            + m[a:b] @ (np.conj(cd) @ p) + m[a:b] @ (np.conj(cs) @ m))
            return complex(tot)

    total = _reduce(block, modes.size, threads)
    return -G_bar ** 2 / modes.L ** 4 * total


def term_E4(modes: InPlaneModes, F_bar: float, G_bar: float, gamma: float, method: str = "high_t",
            threads: int | None = None) -> complex:
    """Third order, two linear and one quadratic vertex.

    ``high_t``: i (Fbar^2 Gbar / L^4) sum W_ab xbar_a^2 xbar_b^2 n_a n_b
    2 P(w_a) P(w_b) [P(w_a + w_b) + P(w_a - w_b)].  ``exact`` uses the full
    kernel.
    """
    _check(gamma)
    if method in ("as_printed", "validated"):
        method = "high_t"
    if method not in ("high_t", "exact"):
        raise ValueError(f"unknown E4 method {method!r}")
    w, x2, n = modes.omega, modes.xbar2, modes.nbar
    vecs = [(s, v * x2) for s, v in _e4_vectors(modes)]

    def block(a, b):
        K = triple_kernel(w[a:b, None], n[a:b, None], w[None, :], n[None, :], gamma, method)
        return complex(sum(s * (v[a:b] @ (K @ v)) for s, v in vecs))

    total = _reduce(block, modes.size, threads)
    return 1j * F_bar ** 2 * G_bar / modes.L ** 4 * total


@dataclass(frozen=True)
class ErrorBreakdown:
    E1: complex
    E2: complex
    E3: complex
    E4: complex
    F_bar_xy: complex
    error_E: float
    error_Eprime: float
    temperature: float

    @property
    def total(self) -> complex:
        return self.E1 + self.E2 + self.E3 + self.E4


def total_fidelity(E1: complex, E2: complex = 0j, E3: complex = 0j, E4: complex = 0j):
    """Mean evolution operator exp(sum E) and the gate errors E and E'."""
    s = complex(E1) + complex(E2) + complex(E3) + complex(E4)
    if not np.isfinite(s.real) or not np.isfinite(s.imag):
        raise ValueError("diagram values must be finite")
    F = complex(np.exp(s))
    return F, 0.5 * (1.0 - F.real), 0.5 * (1.0 - abs(F))


def error_breakdown(modes: InPlaneModes, scales: CouplingScales, method: str = "high_t",
                    threads: int | None = None) -> ErrorBreakdown:
    g = scales.gamma
    E1 = term_E1(modes, scales.G_bar, g)
    E2 = term_E2(modes, scales.F_bar, g)
    E3 = term_E3(modes, scales.G_bar, g, method, threads)
    E4 = term_E4(modes, scales.F_bar, scales.G_bar, g, method, threads)
    F, E, Ep = total_fidelity(E1, E2, E3, E4)
    return ErrorBreakdown(E1, E2, E3, E4, F, E, Ep, modes.temperature)


def lattice_couplings(modes: InPlaneModes, scales: CouplingScales):
    """Dense f, g and partner map of the lattice problem, for small L only.

    The returned arrays feed :func:`.diagrams.connected_terms` and the
    oracles, independently of the separable sums above.
    """
    L = modes.L
    if modes.size > 2000:
        raise ValueError("dense couplings are meant for small lattices")
    # partner of (n1, n2, branch) is (-n1, -n2, branch)
    index = {(a, b, k % 2): k for k, (a, b) in enumerate(zip(modes.n1, modes.n2))}
    partner = np.array([index[((-a) % L, (-b) % L, k % 2)] for k, (a, b) in enumerate(zip(modes.n1, modes.n2))])
    q1 = modes.q1
    F = modes.ex * (1.0 - np.exp(1j * q1))
    ph = 1.0 - np.exp(1j * q1)
    Mq = M_DIAG[0] * np.outer(modes.ex, modes.ex) + M_DIAG[1] * np.outer(modes.ey, modes.ey)
    G = Mq * np.outer(ph, ph)
    return scales.F_bar * F / L, scales.G_bar * G / L ** 2, partner
