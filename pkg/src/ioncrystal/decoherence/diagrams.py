"""
Connected diagrams for a general quadratic-plus-linear coupling.

The bath is a set of modes m with frequency omega_m, occupation n_m and
coordinate X_m whose only nonzero contraction is with X_{p(m)}, where p is
an involution (p(m) = m for Hermitian coordinates, p(q) = -q for running
waves).  The coupling is

    H(t) = P(t) [ sum_m f_m X_m + sum_{a,b} g_ab X_a X_b ],   g symmetric.

The log of the mean evolution operator is, through fourth order in a
small parameter x with f ~ x and g ~ x^2,

    E1 = -i sum_a g[a, p(a)] int P D_a(0)
    E2 = -1/2 sum_a f_a f_p(a) I2_a
    E3 = -sum_{a,b} g_ab g_{p(a) p(b)} I3_ab
    E4 =  i sum_{a,b} f_a f_b g_{p(a) p(b)} K_ab

with the kernels of :mod:`.kernels`.  This module evaluates them on a
dense coupling matrix and is meant for small systems; the lattice sums
live in :mod:`.lattice_terms`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import pair_kernel, second_order_kernel, triple_kernel


@dataclass(frozen=True)
class ModeTable:
    """Bath modes for the dense diagram evaluator and the oracles."""

    omega: np.ndarray
    nbar: np.ndarray
    xbar2: np.ndarray
    partner: np.ndarray

    @classmethod
    def hermitian(cls, omega, nbar, xbar2=None) -> "ModeTable":
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        nbar = np.broadcast_to(np.asarray(nbar, dtype=float), omega.shape).copy()
        xbar2 = np.ones_like(omega) if xbar2 is None else np.broadcast_to(np.asarray(xbar2, float), omega.shape).copy()
        return cls(omega, nbar, xbar2, np.arange(omega.size))

    def __post_init__(self):
        n = self.omega.size
        p = np.asarray(self.partner)
        if not (self.nbar.size == self.xbar2.size == p.size == n):
            raise ValueError("mode table arrays must have equal length")
        if np.any(p[p] != np.arange(n)):
            raise ValueError("partner map must be an involution")
        if np.any(self.omega[p] != self.omega) or np.any(self.nbar[p] != self.nbar):
            raise ValueError("partners must share frequency and occupation")
        if np.any(self.omega <= 0):
            raise ValueError("mode frequencies must be positive")

    @property
    def size(self) -> int:
        return self.omega.size


def connected_terms(modes: ModeTable, f, g, gamma: float, method: str = "exact") -> tuple[complex, complex, complex, complex]:
    """E1..E4 for couplings ``f`` (length M) and ``g`` (M x M, symmetric).

    ``method`` selects the E3/E4 kernels, ``"exact"`` or ``"high_t"``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    M = modes.size
    f = np.zeros(M) if f is None else np.asarray(f, dtype=complex)
    g = np.zeros((M, M)) if g is None else np.asarray(g, dtype=complex)
    if f.shape != (M,) or g.shape != (M, M):
        raise ValueError("coupling shapes do not match the mode table")
    if not np.allclose(g, g.T, atol=1e-14 * max(1.0, np.abs(g).max())):
        raise ValueError("quadratic coupling must be symmetric")
    p = modes.partner
    w, n, x2 = modes.omega, modes.nbar, modes.xbar2

    E1 = -1j * (2.0 / gamma) * np.sum(g[np.arange(M), p] * x2 * (2 * n + 1))
    E2 = -0.5 * np.sum(f * f[p] * x2 * second_order_kernel(w, n, gamma))

    wa, wb = w[:, None], w[None, :]
    na, nb = n[:, None], n[None, :]
    xx = x2[:, None] * x2[None, :]
    gp = g[np.ix_(p, p)]
    I3 = xx * pair_kernel(wa, na, wb, nb, gamma, method)
    E3 = -np.sum(g * gp * I3)
    K = xx * triple_kernel(wa, na, wb, nb, gamma, method)
    E4 = 1j * np.sum(f[:, None] * f[None, :] * gp * K)
    return complex(E1), complex(E2), complex(E3), complex(E4)
