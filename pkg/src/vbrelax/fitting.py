"""Weighted nonlinear least squares for relaxometry data.

All positive quantities (decay constants, power-law amplitude and plateau)
are fitted through their logarithms, so the solver runs unconstrained and
sigmas are mapped back with the delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _backend
from .errors import InvalidInputError
from .synth import DecayCurve

DECAY_MODELS = ("single-exp", "single-exp+offset")

MAX_ITER = 200
FTOL = 1e-10
GTOL = 1e-10
LAMBDA0 = 1e-3
LAMBDA_MAX = 1e16
COND_LIMIT = 1e13


@dataclass
class FitResult:
    names: tuple
    params: dict
    sigmas: dict
    covariance: np.ndarray
    chi2: float
    chi2_reduced: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def value(self, name):
        return self.params[name], self.sigmas[name]


class LMState(NamedTuple):
    x: np.ndarray
    chi2: float
    jtj: np.ndarray
    jtr: np.ndarray
    iterations: int
    converged: bool
    status: str


def _gradient_cosine(chi2, jtj, jtr):
    # max over parameters of |cos| between residual and Jacobian column
    if chi2 <= 0:
        return 0.0
    d = np.sqrt(np.maximum(np.diag(jtj), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(d > 0, np.abs(jtr) / (d * math.sqrt(chi2)), 0.0)
    return float(np.max(c)) if c.size else 0.0


def _newton_step_negligible(x, jtj, jtr, xtol=1e-8):
    # no damped step lowers chi2 and the undamped one is below float resolution
    try:
        step = np.linalg.lstsq(jtj, jtr, rcond=None)[0]
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.abs(step) <= xtol * np.maximum(np.abs(x), 1.0)))


def levenberg_marquardt(
    normal: Callable, chi2_at: Callable, x0, max_iter=MAX_ITER, ftol=FTOL, gtol=GTOL
) -> LMState:
    """Minimize a weighted sum of squares.

    ``normal(x)`` returns ``(chi2, J^T J, J^T r)`` for residuals
    ``r = (y - model) / sigma``; ``chi2_at(x)`` returns chi-square only.
    Damping uses Marquardt's diagonal scaling, starting at 1e-3 and moving
    by factors of ten.
    """
    x = np.array(x0, dtype=float)
    chi2, jtj, jtr = normal(x)
    if not math.isfinite(chi2):
        return LMState(x, chi2, jtj, jtr, 0, False, "non-finite initial chi2")
    lam = LAMBDA0
    it = 0
    while it < max_iter:
        if chi2 == 0.0:
            return LMState(x, chi2, jtj, jtr, it, True, "exact fit")
        if _gradient_cosine(chi2, jtj, jtr) < gtol:
            return LMState(x, chi2, jtj, jtr, it, True, "gradient")
        it += 1
        scale = np.maximum(np.diag(jtj), 1e-300)
        try:
            step = np.linalg.solve(jtj + lam * np.diag(scale), jtr)
        except np.linalg.LinAlgError:
            step = np.full_like(x, np.nan)
        trial = x + step
        c = chi2_at(trial) if np.all(np.isfinite(trial)) else math.inf
        if math.isfinite(c) and c < chi2:
            rel = (chi2 - c) / chi2
            x = trial
            chi2, jtj, jtr = normal(x)
            lam = max(lam / 10.0, 1e-12)
            # a small decrease only counts once the gradient is also small
            if rel < ftol and _gradient_cosine(chi2, jtj, jtr) < 1e-6:
                return LMState(x, chi2, jtj, jtr, it, True, "chi2 reduction")
        else:
            lam *= 10.0
            if lam > LAMBDA_MAX:
                ok = _gradient_cosine(chi2, jtj, jtr) < 1e-6 or _newton_step_negligible(x, jtj, jtr)
                return LMState(x, chi2, jtj, jtr, it, ok, "stalled at minimum" if ok else "stalled")
    return LMState(x, chi2, jtj, jtr, it, False, "max iterations")


def _covariance(jtj, chi2, dof, weighted):
    jtj = 0.5 * (jtj + jtj.T)
    cond = float(np.linalg.cond(jtj)) if np.all(np.isfinite(jtj)) else math.inf
    identifiable = cond < COND_LIMIT
    if identifiable:
        cov = np.linalg.inv(jtj)
    else:
        # flat directions get an effectively unbounded variance
        w, v = np.linalg.eigh(np.nan_to_num(jtj))
        top = max(float(w.max()), 1e-300)
        w = np.where(w > top / COND_LIMIT, w, top * 1e-30)
        cov = (v / w) @ v.T
    if not weighted and dof > 0:
        cov = cov * (chi2 / dof)
    return 0.5 * (cov + cov.T), cond, identifiable


def _finish(state, names, to_natural, n_points, weighted):
    """Map the transformed-space solution to a FitResult in natural units."""
    m = len(names)
    dof = n_points - m
    cov_x, cond, identifiable = _covariance(state.jtj, state.chi2, dof, weighted)
    values, jac = to_natural(state.x)
    cov = jac @ cov_x @ jac.T
    cov = 0.5 * (cov + cov.T)
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return FitResult(
        names=tuple(names),
        params={k: float(v) for k, v in zip(names, values)},
        sigmas={k: float(s) for k, s in zip(names, sig)},
        covariance=cov,
        chi2=float(state.chi2),
        chi2_reduced=float(state.chi2 / dof) if dof > 0 else math.nan,
        iterations=state.iterations,
        converged=bool(state.converged and identifiable),
        diagnostics={
            "status": state.status,
            "condition_number": cond,
            "identifiable": identifiable,
            "weighted": weighted,
            "backend": _backend.BACKEND,
        },
    )


def _weights(sigma, n):
    if sigma is None:
        return np.ones(n), False
    sigma = np.asarray(sigma, dtype=float)
    if np.all(sigma == 0):
        return np.ones(n), False
    if np.any(sigma <= 0):
        raise InvalidInputError("sigma must be > 0 for every point, or absent", key="sigma")
    return 1.0 / sigma, True


class InitialGuess(NamedTuple):
    amplitude: float
    rate: float  # kHz
    offset: float
    fallback: bool


def default_init(curve: DecayCurve, model="single-exp") -> InitialGuess:
    """Starting point from a log-linear regression on baseline-subtracted data."""
    if model not in DECAY_MODELS:
        raise InvalidInputError(f"model must be one of {DECAY_MODELS}", key="model")
    tau, y = curve.tau, curve.signal
    offset = float(y[-1]) if model == "single-exp+offset" else 0.0
    amp = float(y[0])
    fallback_rate = 1e3 / tau[-1] if tau[-1] > 0 else 1e3
    z = y - offset
    pos = z > 0
    if np.count_nonzero(pos) >= 2:
        slope = np.polyfit(tau[pos], np.log(z[pos]), 1)[0]
        if slope < 0 and math.isfinite(slope):
            return InitialGuess(amp, float(-slope * 1e3), offset, False)
    return InitialGuess(amp, float(fallback_rate), offset, True)


def fit_decay(curve: DecayCurve, model="single-exp", init: InitialGuess | None = None) -> FitResult:
    """Fit ``amplitude * exp(-rate * tau) [+ offset]``; rate in kHz, tau in us."""
    if model not in DECAY_MODELS:
        raise InvalidInputError(f"model must be one of {DECAY_MODELS}", key="model")
    with_offset = model == "single-exp+offset"
    m = 3 if with_offset else 2
    n = len(curve)
    if n < max(3, m):
        raise InvalidInputError(f"need at least {max(3, m)} points, got {n}", key="points")
    w, weighted = _weights(curve.sigma, n)
    tau = np.ascontiguousarray(curve.tau)
    y = np.ascontiguousarray(curve.signal)
    g = init or default_init(curve, model)
    x0 = [g.amplitude, math.log(g.rate)] + ([g.offset] if with_offset else [])

    def unpack(x):
        return x[0], x[1], (x[2] if with_offset else 0.0)

    def normal(x):
        a, lk, c = unpack(x)
        return _backend.exp_normal_equations(tau, y, w, a, lk, c, with_offset)

    def chi2_at(x):
        a, lk, c = unpack(x)
        if lk > 700:
            return math.inf
        return _backend.exp_chi2(tau, y, w, a, lk, c)

    state = levenberg_marquardt(normal, chi2_at, x0)

    def to_natural(x):
        k = math.exp(min(x[1], 700.0))
        jac = np.eye(m)
        jac[1, 1] = k
        vals = [x[0], k] + ([x[2]] if with_offset else [])
        return np.array(vals), jac

    names = ("amplitude", "rate") + (("offset",) if with_offset else ())
    res = _finish(state, names, to_natural, n, weighted)
    res.diagnostics["model"] = model
    res.diagnostics["init"] = g._asdict()
    return res


@dataclass
class RateEstimate:
    omega: float
    omega_sigma: float
    gamma: float
    gamma_sigma: float
    gamma_raw: float
    physical: bool
    f1_fit: FitResult
    f2_fit: FitResult

    @property
    def converged(self):
        return self.f1_fit.converged and self.f2_fit.converged


def extract_rates(f1: DecayCurve, f2: DecayCurve, model="single-exp") -> RateEstimate:
    """Sequential F1 then F2 fits; sigmas propagated assuming independence.

    A negative ``gamma`` (F2 decaying slower than omega) is kept in
    ``gamma_raw``; ``gamma`` is clamped to zero and ``physical`` is False.
    """
    fit1 = fit_decay(f1, model)
    fit2 = fit_decay(f2, model)
    k1, s1 = fit1.value("rate")
    k2, s2 = fit2.value("rate")
    omega, s_omega = k1 / 3.0, s1 / 3.0
    gamma_raw = (k2 - omega) / 2.0
    s_gamma = 0.5 * math.hypot(s2, s_omega)
    physical = gamma_raw >= 0
    return RateEstimate(omega, s_omega, max(gamma_raw, 0.0), s_gamma, gamma_raw, physical, fit1, fit2)


@dataclass
class PowerLawFit:
    amplitude: float
    exponent: float
    gamma_inf: float
    e_used: float
    amplitude_sigma: float
    exponent_sigma: float
    gamma_inf_sigma: float
    fit: FitResult

    @property
    def degenerate(self):
        """True when the data do not pin down all three parameters."""
        if not self.fit.converged:
            return True
        rel = [
            self.amplitude_sigma / self.amplitude if self.amplitude > 0 else math.inf,
            self.gamma_inf_sigma / self.gamma_inf if self.gamma_inf > 0 else math.inf,
        ]
        return self.exponent_sigma > 1e2 or max(rel) > 1e3

    def __call__(self, f):
        return power_law(f, self.amplitude, self.exponent, self.gamma_inf, self.e_used)


def power_law(f, amplitude, exponent, gamma_inf, e_mhz):
    """DQ rate ``A / (f - 2E)**a + gamma_inf`` (kHz) at splitting ``f`` (MHz)."""
    u = np.asarray(f, dtype=float) - 2.0 * e_mhz
    return amplitude * u ** (-exponent) + gamma_inf


def power_law_jacobian(log_u, x):
    """Model and Jacobian in fit coordinates ``(ln A, a, ln gamma_inf)``.

    ``log_u`` is ``ln(f - 2E)``.
    """
    term = np.exp(x[0] - x[1] * log_u)
    g_inf = math.exp(x[2])
    jac = np.column_stack([term, -term * log_u, np.full(log_u.shape, g_inf)])
    return term + g_inf, jac


def _unpack_points(points):
    arr = [tuple(p) for p in points]
    f = np.array([p[0] for p in arr], dtype=float)
    g = np.array([p[1] for p in arr], dtype=float)
    if all(len(p) > 2 and p[2] is not None for p in arr):
        s = np.array([p[2] for p in arr], dtype=float)
    else:
        s = None
    return f, g, s


def fit_power_law(points, e_mhz: float) -> PowerLawFit:
    f, gam, sig = _unpack_points(points)
    if f.size < 4:
        raise InvalidInputError(f"need at least 4 points, got {f.size}", key="points")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(gam))):
        raise InvalidInputError("points must be finite", key="points")
    bad = np.nonzero(f <= 2.0 * e_mhz)[0]
    if bad.size:
        raise InvalidInputError(
            f"row {int(bad[0])}: f={f[bad[0]]} MHz is not above 2E={2.0 * e_mhz} MHz",
            key="f_mhz",
        )
    w, weighted = _weights(sig, f.size)
    u = f - 2.0 * e_mhz
    lu = np.log(u)

    g_inf0 = float(np.min(gam))
    if g_inf0 <= 0:
        g_inf0 = 1e-3 * max(float(np.max(np.abs(gam))), 1e-12)
    lo, hi = int(np.argmin(u)), int(np.argmax(u))
    a0 = 2.0
    amp0 = (gam[lo] - gam[hi]) / (u[lo] ** -a0 - u[hi] ** -a0)
    if not (amp0 > 0 and math.isfinite(amp0)):
        amp0 = max(float(np.max(gam) - g_inf0), 1e-12) * u[lo] ** a0
    x0 = [math.log(amp0), a0, math.log(g_inf0)]

    def normal(x):
        model, jac = power_law_jacobian(lu, x)
        r = (gam - model) * w
        jac = jac * w[:, None]
        return float(r @ r), jac.T @ jac, jac.T @ r

    def chi2_at(x):
        if abs(x[2]) > 700 or np.any(np.abs(x[0] - x[1] * lu) > 700):
            return math.inf
        model, _ = power_law_jacobian(lu, x)
        r = (gam - model) * w
        return float(r @ r)

    state = levenberg_marquardt(normal, chi2_at, x0)

    def to_natural(x):
        amp, g_inf = math.exp(x[0]), math.exp(x[2])
        return np.array([amp, x[1], g_inf]), np.diag([amp, 1.0, g_inf])

    res = _finish(state, ("amplitude", "exponent", "gamma_inf"), to_natural, f.size, weighted)
    p, s = res.params, res.sigmas
    return PowerLawFit(
        p["amplitude"], p["exponent"], p["gamma_inf"], float(e_mhz),
        s["amplitude"], s["exponent"], s["gamma_inf"], res,
    )


@dataclass
class TempLawFit:
    exponent: float
    log_prefactor: float
    exponent_sigma: float
    log_prefactor_sigma: float
    n_points: int

    def __call__(self, t_kelvin):
        return np.exp(self.log_prefactor) * np.asarray(t_kelvin, dtype=float) ** self.exponent


def fit_temperature_law(points) -> TempLawFit:
    """Ordinary least squares of ``ln(1/T1)`` against ``ln T``."""
    arr = np.array([tuple(p)[:2] for p in points], dtype=float).reshape(-1, 2)
    if arr.shape[0] < 2:
        raise InvalidInputError("need at least 2 points", key="points")
    t, rate = arr[:, 0], arr[:, 1]
    if not (np.all(np.isfinite(arr)) and np.all(t > 0) and np.all(rate > 0)):
        raise InvalidInputError("temperatures and rates must be finite and > 0", key="points")
    x, y = np.log(t), np.log(rate)
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise InvalidInputError("need at least two distinct temperatures", key="t_kelvin")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    if n > 2:
        s2 = float(np.sum((y - intercept - slope * x) ** 2)) / (n - 2)
        se_slope = math.sqrt(s2 / sxx)
        se_int = math.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    else:
        se_slope = se_int = 0.0
    return TempLawFit(slope, intercept, se_slope, se_int, n)
