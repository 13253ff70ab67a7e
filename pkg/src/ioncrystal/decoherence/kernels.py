"""
Closed-form time integrals over the exponential pulse.

The pulse is P(t) = exp(-Gamma |t|).  A mode of frequency w with
occupation n contributes the time-ordered contraction

    D(tau) = xbar^2 [(n + 1) exp(-i w |tau|) + n exp(i w |tau|)],

and every diagram reduces to integrals of products of P and D.  These
functions evaluate them exactly; all arguments broadcast.
"""

from __future__ import annotations

import numpy as np


def _check_gamma(gamma):
    if not np.all(np.asarray(gamma) > 0):
        raise ValueError("pulse rate gamma must be positive")


def pulse_spectrum(omega, gamma):
    """Fourier transform of exp(-Gamma |t|): 2 Gamma / (omega^2 + Gamma^2)."""
    _check_gamma(gamma)
    omega = np.asarray(omega, dtype=float)
    return 2.0 * gamma / (omega * omega + gamma * gamma)


def pulse_response(omega, gamma):
    """2 omega / (Gamma^2 + omega^2), the dispersive partner of P."""
    omega = np.asarray(omega, dtype=float)
    return 2.0 * omega / (gamma * gamma + omega * omega)


def autocorrelation_transform(nu, gamma):
    """C(nu) = int A(tau) exp(-i nu |tau|) dtau with A = P * P.

    A(tau) = exp(-Gamma |tau|) (|tau| + 1/Gamma) is the pulse
    autocorrelation.  Re C = P(nu)^2 and C(-nu) = conj(C(nu)).
    """
    _check_gamma(gamma)
    z = gamma + 1j * np.asarray(nu, dtype=float)
    return 2.0 / (z * z) + 2.0 / (gamma * z)


def second_order_kernel(omega, nbar, gamma):
    """int int P(t1) P(t2) D(t1 - t2) divided by xbar^2.

    Equal to (2n + 1) P(omega)^2 - i S(omega).
    """
    omega = np.asarray(omega, dtype=float)
    p = pulse_spectrum(omega, gamma)
    g2w2 = gamma * gamma + omega * omega
    s = 2.0 * (omega / (gamma * g2w2) + 2.0 * omega * gamma / g2w2 ** 2)
    return (2.0 * np.asarray(nbar) + 1.0) * p * p - 1j * s


def pair_kernel(wa, na, wb, nb, gamma, method: str = "exact"):
    """int A(tau) D_a(tau) D_b(tau) dtau divided by xbar_a^2 xbar_b^2.

    ``method="high_t"`` keeps only the n_a n_b terms, in which case the
    result is real: 2 n_a n_b [P(wa + wb)^2 + P(wa - wb)^2].
    """
    wa, wb = np.asarray(wa, dtype=float), np.asarray(wb, dtype=float)
    na, nb = np.asarray(na, dtype=float), np.asarray(nb, dtype=float)
    if method == "high_t":
        ps = pulse_spectrum(wa + wb, gamma)
        pd = pulse_spectrum(wa - wb, gamma)
        return 2.0 * na * nb * (ps * ps + pd * pd)
    if method == "as_printed":
        return 2.0 * na * nb * (pulse_spectrum(wa + wb, gamma) + pulse_spectrum(wa - wb, gamma))
    if method != "exact":
        raise ValueError(f"unknown kernel method {method!r}")
    cs = autocorrelation_transform(wa + wb, gamma)
    cd = autocorrelation_transform(wa - wb, gamma)
    return ((na + 1) * (nb + 1) * cs + (na + 1) * nb * cd
            + na * (nb + 1) * np.conj(cd) + na * nb * np.conj(cs))


def _response_terms(omega, nbar, gamma):
    # u(t) = int P(t') D(t' - t) dt' = sum_i c_i exp(-s_i |t|), times xbar^2
    omega = np.asarray(omega, dtype=float)
    nbar = np.asarray(nbar, dtype=float)
    p = pulse_spectrum(omega, gamma)
    w = pulse_response(omega, gamma)
    coeffs = ((nbar + 1.0) * p, nbar * p, -1j * w * np.ones_like(nbar))
    rates = (1j * omega, -1j * omega, gamma * np.ones_like(omega))
    return coeffs, rates


def triple_kernel(wa, na, wb, nb, gamma, method: str = "exact"):
    """int P(t) u_a(t) u_b(t) dt divided by xbar_a^2 xbar_b^2.

    u(t) is the pulse-averaged contraction.  ``method="high_t"`` gives
    2 n_a n_b P(wa) P(wb) [P(wa + wb) + P(wa - wb)].
    """
    if method == "high_t":
        wa, wb = np.asarray(wa, dtype=float), np.asarray(wb, dtype=float)
        return (2.0 * np.asarray(na) * np.asarray(nb) * pulse_spectrum(wa, gamma) * pulse_spectrum(wb, gamma)
                * (pulse_spectrum(wa + wb, gamma) + pulse_spectrum(wa - wb, gamma)))
    if method != "exact":
        raise ValueError(f"unknown kernel method {method!r}")
    ca, sa = _response_terms(wa, na, gamma)
    cb, sb = _response_terms(wb, nb, gamma)
    total = 0.0
    for ci, si in zip(ca, sa):
        for cj, sj in zip(cb, sb):
            total = total + ci * cj / (gamma + si + sj)
    return 2.0 * total


class QuadratureError(RuntimeError):
    """Numerical quadrature did not reach the requested accuracy."""


def pair_kernel_quadrature(wa, na, wb, nb, gamma, rel_tol=1e-8):
    """Pair kernel by direct numerical integration over the time lag.

    The lag integral int A(tau) D_a(tau) D_b(tau) dtau is split into its
    Fourier components.  Each half-line transform is truncated at
    Gamma tau = 80, where the envelope is below 1e-30, and done with
    QUADPACK's oscillatory-weight routine; the closed form is never used.
    """
    import warnings

    from scipy.integrate import IntegrationWarning, quad

    _check_gamma(gamma)
    t_end = 80.0 / gamma
    scale = 1.0 / gamma ** 2

    def envelope(t):
        return np.exp(-gamma * t) * (t + 1.0 / gamma)

    def transform(nu):
        # 2 int_0^inf A(t) exp(-i nu t) dt; convergence is judged below
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            return _transform(nu)

    def _transform(nu):
        re, err_re = quad(envelope, 0.0, t_end, weight="cos", wvar=abs(nu), epsabs=0.0,
                          epsrel=1e-11, limit=400)
        if nu == 0.0:
            im, err_im = 0.0, 0.0
        else:
            im, err_im = quad(envelope, 0.0, t_end, weight="sin", wvar=abs(nu), epsabs=0.0,
                              epsrel=1e-11, limit=400)
            im = -np.sign(nu) * im
        if max(err_re, err_im) > rel_tol * max(abs(re), abs(im), scale):
            raise QuadratureError(f"lag quadrature for nu = {nu:g} did not converge")
        return 2.0 * complex(re, im)

    s, d = wa + wb, wa - wb
    return ((na + 1) * (nb + 1) * transform(s) + (na + 1) * nb * transform(d)
            + na * (nb + 1) * transform(-d) + na * nb * transform(-s))
