"""Transverse electric-field noise from double-quantum relaxation rates.

Rates enter in kHz and are converted to Hz; the susceptibility is in
Hz*m/V, so noise intensities come out in (V/m)^2/Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

GRID_TOL_MHZ = 1e-9


@dataclass(frozen=True)
class Susceptibility:
    d_perp_over_h: float = 0.4  # Hz*m/V

    def __post_init__(self):
        if not (math.isfinite(self.d_perp_over_h) and self.d_perp_over_h > 0):
            raise InvalidInputError("d_perp_over_h must be > 0", key="d_perp_over_h")


DEFAULT_SUSCEPTIBILITY = Susceptibility()


@dataclass(frozen=True)
class NoisePoint:
    f: float  # MHz
    s_e_perp: float  # (V/m)^2/Hz
    sigma: float

    @property
    def physical(self):
        return self.s_e_perp >= 0


@dataclass
class NoiseSpectrum:
    points: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.points:
            raise InvalidInputError("spectrum must contain at least one point")
        f = self.frequencies
        if np.any(np.diff(f) <= 0):
            raise InvalidInputError("spectrum frequencies must be strictly ascending", key="f_mhz")

    @property
    def frequencies(self):
        return np.array([p.f for p in self.points])

    @property
    def values(self):
        return np.array([p.s_e_perp for p in self.points])

    @property
    def sigmas(self):
        return np.array([p.sigma for p in self.points])

    @property
    def unphysical(self):
        return [i for i, p in enumerate(self.points) if not p.physical]

    def scaled(self, factor):
        return NoiseSpectrum(
            [NoisePoint(p.f, p.s_e_perp * factor, p.sigma * abs(factor)) for p in self.points],
            dict(self.meta),
        )


def _per_rate(value_khz, sus):
    # two sequential divisions keep the decimal examples exact in binary
    return value_khz * 1e3 / sus.d_perp_over_h / sus.d_perp_over_h


def electric_noise(gamma, gamma_inf, sus: Susceptibility = DEFAULT_SUSCEPTIBILITY) -> float:
    """Noise intensity ``(gamma - gamma_inf) / (d_perp/h)**2``.

    A rate below the plateau gives a negative value; callers see it through
    ``NoisePoint.physical`` rather than having it clamped away.
    """
    return _per_rate(gamma - gamma_inf, sus)


def build_spectrum(entries, gamma_inf, sus: Susceptibility = DEFAULT_SUSCEPTIBILITY,
                   gamma_inf_sigma=None, meta=None) -> NoiseSpectrum:
    """Spectrum from ``(f_mhz, gamma_khz, gamma_err_khz)`` rows, sorted by f.

    Passing ``gamma_inf_sigma`` adds the plateau uncertainty in quadrature.
    """
    rows = [tuple(e) for e in entries]
    if not rows:
        raise InvalidInputError("no entries", key="entries")
    freqs = [r[0] for r in rows]
    if len(set(freqs)) != len(freqs):
        raise InvalidInputError("duplicate f values", key="f_mhz")
    points = []
    for f, g, s in sorted(rows, key=lambda r: r[0]):
        if not (math.isfinite(f) and f > 0):
            raise InvalidInputError(f"f must be > 0, got {f}", key="f_mhz")
        if s < 0:
            raise InvalidInputError("gamma uncertainty must be >= 0", key="gamma_err_khz")
        if gamma_inf_sigma:
            s = math.hypot(s, gamma_inf_sigma)
        points.append(NoisePoint(float(f), electric_noise(g, gamma_inf, sus), _per_rate(s, sus)))
    return NoiseSpectrum(points, dict(meta or {}))


@dataclass
class SuppressionResult:
    f: np.ndarray
    percent: np.ndarray  # nan where the raw spectrum vanishes
    average: float
    excluded: list


def suppression(raw: NoiseSpectrum, coated: NoiseSpectrum) -> SuppressionResult:
    """Per-point ``100 * (1 - coated/raw)`` and its unweighted mean."""
    fr, fc = raw.frequencies, coated.frequencies
    if fr.size != fc.size or np.any(np.abs(fr - fc) > GRID_TOL_MHZ):
        raise InvalidInputError("raw and coated spectra must share one frequency grid", key="f_mhz")
    r, c = raw.values, coated.values
    excluded = [int(i) for i in np.nonzero(r == 0)[0]]
    pct = np.full(r.size, np.nan)
    ok = r != 0
    pct[ok] = 100.0 * (1.0 - c[ok] / r[ok])
    average = float(np.mean(pct[ok])) if np.any(ok) else math.nan
    return SuppressionResult(fr, pct, average, excluded)
