# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``vbrelax._fallback`` exactly."""

from libc.math cimport exp, ceil

import numpy as np


cdef inline void _deriv(double pm, double p0, double pp, double om, double ga,
                        double* dm, double* d0, double* dp) noexcept nogil:
    dm[0] = om * (p0 - pm) + ga * (pp - pm)
    d0[0] = om * (pm - 2.0 * p0 + pp)
    dp[0] = om * (p0 - pp) + ga * (pm - pp)


def rk4_populations(double pm, double p0, double pp, double omega_khz,
                    double gamma_khz, double tau_us, long nsteps):
    cdef double om = omega_khz * 1e-3
    cdef double ga = gamma_khz * 1e-3
    cdef double h, h2
    cdef double k1m, k10, k1p, k2m, k20, k2p, k3m, k30, k3p, k4m, k40, k4p
    cdef long i
    if nsteps <= 0 or tau_us == 0.0:
        return pm, p0, pp
    h = tau_us / nsteps
    h2 = 0.5 * h
    with nogil:
        for i in range(nsteps):
            _deriv(pm, p0, pp, om, ga, &k1m, &k10, &k1p)
            _deriv(pm + h2 * k1m, p0 + h2 * k10, pp + h2 * k1p, om, ga, &k2m, &k20, &k2p)
            _deriv(pm + h2 * k2m, p0 + h2 * k20, pp + h2 * k2p, om, ga, &k3m, &k30, &k3p)
            _deriv(pm + h * k3m, p0 + h * k30, pp + h * k3p, om, ga, &k4m, &k40, &k4p)
            pm += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
            p0 += h / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
            pp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return pm, p0, pp


def exp_chi2(const double[::1] tau, const double[::1] y, const double[::1] w,
             double amp, double log_rate, double offset):
    cdef Py_ssize_t i, n = tau.shape[0]
    cdef double k = exp(log_rate) * 1e-3
    cdef double r, chi2 = 0.0
    with nogil:
        for i in range(n):
            r = (y[i] - amp * exp(-k * tau[i]) - offset) * w[i]
            chi2 += r * r
    return chi2


def exp_normal_equations(const double[::1] tau, const double[::1] y,
                         const double[::1] w, double amp, double log_rate,
                         double offset, bint with_offset):
    cdef Py_ssize_t i, a, b, n = tau.shape[0]
    cdef int m = 3 if with_offset else 2
    cdef double k = exp(log_rate) * 1e-3
    cdef double e, r, chi2 = 0.0
    cdef double j[3]
    cdef double jtj[3][3]
    cdef double jtr[3]
    for a in range(3):
        jtr[a] = 0.0
        for b in range(3):
            jtj[a][b] = 0.0
    with nogil:
        for i in range(n):
            e = exp(-k * tau[i])
            r = (y[i] - amp * e - offset) * w[i]
            chi2 += r * r
            j[0] = e * w[i]
            j[1] = -amp * k * tau[i] * e * w[i]
            j[2] = w[i]
            for a in range(m):
                jtr[a] += j[a] * r
                for b in range(a, m):
                    jtj[a][b] += j[a] * j[b]
    out_jtj = np.empty((m, m))
    out_jtr = np.empty(m)
    for a in range(m):
        out_jtr[a] = jtr[a]
        for b in range(a, m):
            out_jtj[a, b] = jtj[a][b]
            out_jtj[b, a] = jtj[a][b]
    return chi2, out_jtj, out_jtr
