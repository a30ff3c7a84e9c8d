"""Pure-Python implementations of the compiled kernels.

Used when ``vbrelax._kernels`` is not built or when ``VBRELAX_PURE_PYTHON``
is set. Results agree with the extension to rounding.
"""

import math

import numpy as np


def rk4_populations(pm, p0, pp, omega_khz, gamma_khz, tau_us, nsteps):
    """Fixed-step classical RK4 for the three-level rate equations."""
    if nsteps <= 0 or tau_us == 0.0:
        return pm, p0, pp
    om = omega_khz * 1e-3
    ga = gamma_khz * 1e-3
    h = tau_us / nsteps
    h2 = 0.5 * h
    h6 = h / 6.0

    def deriv(a, b, c):
        return om * (b - a) + ga * (c - a), om * (a - 2.0 * b + c), om * (b - c) + ga * (a - c)

    for _ in range(nsteps):
        k1 = deriv(pm, p0, pp)
        k2 = deriv(pm + h2 * k1[0], p0 + h2 * k1[1], pp + h2 * k1[2])
        k3 = deriv(pm + h2 * k2[0], p0 + h2 * k2[1], pp + h2 * k2[2])
        k4 = deriv(pm + h * k3[0], p0 + h * k3[1], pp + h * k3[2])
        pm += h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        p0 += h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        pp += h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    return pm, p0, pp


def exp_chi2(tau, y, w, amp, log_rate, offset):
    k = math.exp(log_rate) * 1e-3
    r = (y - amp * np.exp(-k * tau) - offset) * w
    return float(r @ r)


def exp_normal_equations(tau, y, w, amp, log_rate, offset, with_offset):
    """Weighted chi-square, J^T J and J^T r for ``amp*exp(-k*tau) + offset``.

    Parameters are ``(amp, log k[, offset])`` with k in kHz and tau in us.
    """
    k = math.exp(log_rate) * 1e-3
    e = np.exp(-k * tau)
    r = (y - amp * e - offset) * w
    cols = [e * w, -amp * k * tau * e * w]
    if with_offset:
        cols.append(w)
    jac = np.column_stack(cols)
    return float(r @ r), jac.T @ jac, jac.T @ r
