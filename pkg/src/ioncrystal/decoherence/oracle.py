"""
Non-perturbative references for the mean evolution operator.

Both oracles evaluate

    Fbar = tr[ rho_thermal  T exp(-i int H_I(t) dt) ]

for H_I(t) = P(t) [sum_j f_j X_j(t) + sum_jk g_jk X_j(t) X_k(t)] in the
interaction picture, with X_j(t) = xbar_j (a_j^+ e^{i w_j t} + a_p(j) e^{-i w_j t}).

``exact_fidelity_oracle`` works on a truncated number basis and needs only
the mode table.  ``gaussian_fidelity_oracle`` exploits that the
Hamiltonian is quadratic: a thermofield-doubled squeezed coherent state
stays Gaussian, so the overlap follows from a Riccati equation with no
truncation at all.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .diagrams import ModeTable


class TruncationError(RuntimeError):
    """The number-basis cutoff is too small for the requested accuracy."""


class ConvergenceError(RuntimeError):
    """Halving the time step moved the result by more than the tolerance."""


def _prepare(modes: ModeTable, f, g):
    M = modes.size
    f = np.zeros(M, complex) if f is None else np.asarray(f, dtype=complex)
    g = np.zeros((M, M), complex) if g is None else np.asarray(g, dtype=complex)
    if f.shape != (M,) or g.shape != (M, M):
        raise ValueError("coupling shapes do not match the mode table")
    g = 0.5 * (g + g.T)
    return f, g


def _window(gamma, t_max):
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if t_max is None:
        t_max = 30.0 / gamma
    if t_max * gamma < 20.0:
        raise ValueError("integration window must satisfy gamma * t_max >= 20")
    return t_max


# ---------------------------------------------------------------------------
# Gaussian (thermofield) oracle


def gaussian_fidelity_oracle(modes: ModeTable, f, g, gamma: float, t_max: float | None = None,
                             rtol: float = 1e-12, atol: float = 1e-14) -> complex:
    """Exact ln Fbar for a quadratic coupling, returned as a complex log.

    The thermal state is purified with one ancilla per mode.  The doubled
    state exp(c + beta.a^+ + a^+ Z a^+ / 2)|0> obeys

        i dc/dt    = P [tr(B Z) + beta B beta + e.beta + kappa]
        i dbeta/dt = P [2 Z B beta + C beta + d + Z e]
        i dZ/dt    = P [2 A + 2 Z B Z + C Z + Z C^T]

    where H_I/P = a^+ A a^+ + a B a + a^+ C a + d.a^+ + e.a + kappa.  The
    log-determinant of the final overlap is integrated along the path so
    the returned logarithm is on the continuous branch.
    """
    t_max = _window(gamma, t_max)
    f, g = _prepare(modes, f, g)
    M = modes.size
    D = 2 * M
    p = modes.partner
    w = modes.omega
    x = np.sqrt(modes.xbar2)
    xp = x[p]

    tt = np.sqrt(modes.nbar / (modes.nbar + 1.0))
    Y = np.zeros((D, D))
    Y[np.arange(M), M + np.arange(M)] = tt
    Y[M + np.arange(M), np.arange(M)] = tt
    c0 = 0.5 * float(np.sum(np.log1p(-tt * tt)))
    ell0 = float(np.sum(2.0 * np.log1p(-tt * tt)))

    gpp = g[np.ix_(p, p)]
    g_mp = g[:, p]
    kappa = complex(np.sum(xp * g[p, np.arange(M)] * x))
    I = np.eye(D)

    def coeffs(t):
        ph = np.exp(1j * w * t)
        u_c = x * ph            # creation side, e^{+i w t}
        u_a = xp * ph.conj()    # annihilation side, e^{-i w t}
        A = np.zeros((D, D), complex)
        B = np.zeros((D, D), complex)
        C = np.zeros((D, D), complex)
        A[:M, :M] = g * np.outer(u_c, u_c)
        B[:M, :M] = gpp * np.outer(u_a, u_a)
        C[:M, :M] = 2.0 * g_mp * np.outer(u_c, u_a)
        d = np.zeros(D, complex)
        e = np.zeros(D, complex)
        d[:M] = f * u_c
        e[:M] = f[p] * u_a
        return A, B, C, d, e

    def unpack(y):
        return y[0], y[1], y[2:2 + D], y[2 + D:].reshape(D, D)

    def rhs(t, y):
        _, _, beta, Z = unpack(y)
        P = math.exp(-gamma * abs(t))
        A, B, C, d, e = coeffs(t)
        BZ = B @ Z
        dc = -1j * P * (np.trace(BZ) + beta @ B @ beta + e @ beta + kappa)
        dbeta = -1j * P * (2.0 * Z @ (B @ beta) + C @ beta + d + Z @ e)
        CZ = C @ Z
        dZ = -1j * P * (2.0 * A + 2.0 * Z @ BZ + CZ + CZ.T)
        dell = -np.trace(np.linalg.solve(I - Z @ Y, dZ @ Y))
        return np.concatenate(([dc, dell], dbeta, dZ.ravel()))

    y = np.concatenate(([c0, ell0], np.zeros(D), Y.ravel())).astype(complex)
    # the pulse has a kink at t = 0: integrate the two halves separately
    for a, b in ((-t_max, 0.0), (0.0, t_max)):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise ConvergenceError(f"Riccati integration failed: {sol.message}")
        y = sol.y[:, -1]
    c, ell, beta, Z = unpack(y)
    lin = 0.5 * beta @ Y @ np.linalg.solve(I - Z @ Y, beta)
    return complex(c + c0 - 0.5 * ell + lin)


# ---------------------------------------------------------------------------
# Truncated number-basis oracle


def _ladder(N):
    return sparse.diags(np.sqrt(np.arange(1, N, dtype=float)), 1, format="csr")


def _fock_operators(modes: ModeTable, cutoff: int):
    M = modes.size
    dims = [cutoff] * M
    a1 = _ladder(cutoff)
    eye = sparse.identity(cutoff, format="csr")
    ops = []
    for m in range(M):
        factors = [a1 if k == m else eye for k in range(M)]
        op = factors[0]
        for fac in factors[1:]:
            op = sparse.kron(op, fac, format="csr")
        ops.append(op)
    levels = np.array(list(itertools.product(*[range(d) for d in dims])))
    return ops, levels


def exact_fidelity_oracle(modes: ModeTable, f, g, gamma: float, cutoff: int = 40,
                          t_max: float | None = None, dt: float | None = None,
                          tol: float = 1e-8, max_halvings: int = 6,
                          weight_floor: float = 1e-14) -> complex:
    """Mean evolution operator on a truncated number basis (complex Fbar).

    The interaction-picture Schroedinger equation is stepped with fixed-step
    classical Runge-Kutta; the step is halved until two successive results
    agree to ``tol``.  Only thermal basis states with weight above
    ``weight_floor`` are propagated.

    Raises
    ------
    TruncationError
        If the thermal weight beyond the cutoff exceeds 1e-8 for any mode,
        or if the propagated states leak into the top level.
    ConvergenceError
        If step halving does not converge within ``max_halvings``.
    """
    if modes.size > 3:
        raise ValueError("the number-basis oracle handles at most 3 modes")
    if np.any(modes.partner != np.arange(modes.size)):
        raise ValueError("the number-basis oracle needs Hermitian coordinates")
    t_max = _window(gamma, t_max)
    f, g = _prepare(modes, f, g)
    n = modes.nbar
    ratio = n / (n + 1.0)
    tail = ratio ** cutoff
    if np.any(tail > 1e-8):
        raise TruncationError(f"thermal weight above cutoff {cutoff} is {tail.max():.2e} > 1e-8")

    ops, levels = _fock_operators(modes, cutoff)
    x = np.sqrt(modes.xbar2)
    X = [x[m] * (ops[m] + ops[m].T) for m in range(modes.size)]
    dim = levels.shape[0]
    V = sparse.csr_matrix((dim, dim), dtype=complex)
    for a in range(modes.size):
        if f[a] != 0:
            V = V + f[a] * X[a]
        for b in range(modes.size):
            if g[a, b] != 0:
                V = V + g[a, b] * (X[a] @ X[b])
    V = V.tocoo()
    energy = levels @ modes.omega
    dE = np.round(energy[V.row] - energy[V.col], 12)
    # split V_I(t) = sum_k exp(i w_k t) V_k over the distinct Bohr frequencies
    freqs = np.unique(dE)
    parts = []
    for wk in freqs:
        sel = dE == wk
        parts.append((wk, sparse.csr_matrix((V.data[sel], (V.row[sel], V.col[sel])), shape=V.shape)))

    # thermal weights of product states; 0**0 = 1 covers nbar = 0
    weights = np.prod((1.0 - ratio) * ratio ** levels, axis=1)
    cols = np.nonzero(weights > weight_floor)[0]
    if cols.size == 0:
        raise TruncationError("no basis state carries thermal weight")

    if not parts:
        # no coupling: the evolution operator is the identity
        return complex(math.fsum(weights))

    def rhs(t, psi):
        out = parts[0][1] @ psi * np.exp(1j * parts[0][0] * t)
        for wk, Vk in parts[1:]:
            out += np.exp(1j * wk * t) * (Vk @ psi)
        return -1j * math.exp(-gamma * abs(t)) * out

    psi0 = np.zeros((V.shape[0], cols.size), complex)
    psi0[cols, np.arange(cols.size)] = 1.0

    def run(step):
        nsteps = int(math.ceil(t_max / step))
        h = t_max / nsteps
        psi = psi0.copy()
        t = -t_max
        for _ in range(2 * nsteps):
            k1 = rhs(t, psi)
            k2 = rhs(t + h / 2, psi + h / 2 * k1)
            k3 = rhs(t + h / 2, psi + h / 2 * k2)
            k4 = rhs(t + h, psi + h * k3)
            psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        return psi

    w_max = float(np.abs(dE).max()) if dE.size else 0.0
    vnorm = float(abs(V).sum(axis=1).max()) if V.nnz else 0.0
    step = dt if dt is not None else 1.0 / max(w_max, vnorm, gamma, 1.0)

    def fbar(psi):
        return complex(np.sum(weights[cols] * psi[cols, np.arange(cols.size)]))

    psi = run(step)
    prev = fbar(psi)
    for _ in range(max_halvings):
        step /= 2
        psi = run(step)
        cur = fbar(psi)
        if abs(cur - prev) < tol:
            break
        prev = cur
    else:
        raise ConvergenceError(f"step halving did not converge to {tol:g}")

    top = np.any(levels >= cutoff - 1, axis=1)
    leak = float(np.sum(weights[cols] * np.sum(np.abs(psi[top]) ** 2, axis=0)))
    if leak > 1e-8:
        raise TruncationError(f"population {leak:.2e} reached the top level; raise the cutoff")
    return cur
