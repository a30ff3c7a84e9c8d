"""Seeded synthetic decay curves for round-trip validation of the fitters.

Noise streams come from numpy's PCG64 generator seeded through
``SeedSequence(seed, spawn_key=(stream,))``; F1 uses stream 0 and F2 stream 1
so the two curves of a pair are independent but both fixed by one seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .rates import KHZ_US, RateParams, ReadoutModel, f1_signal, f2_signal

MODELS = ("F1", "F2", "single-exp")

# Per-point noise (unit readout amplitude, one shot) for which paired fits on
# the default grid give sigma_omega ~ 3.0 kHz and sigma_gamma ~ 10.4 kHz at
# omega = 35.1 kHz, gamma = 99.8 kHz.
REFERENCE_NOISE_SCALE = 0.08


@dataclass(frozen=True)
class AcquisitionConfig:
    tau_grid: tuple
    shots: int = 1
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        grid = np.asarray(self.tau_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise InvalidInputError("tau_grid must be a non-empty 1-D sequence", key="tau_grid")
        if not np.all(np.isfinite(grid)) or np.any(grid < 0):
            raise InvalidInputError("tau_grid values must be finite and >= 0", key="tau_grid")
        if np.any(np.diff(grid) <= 0):
            raise InvalidInputError("tau_grid must be strictly increasing", key="tau_grid")
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in grid))
        if int(self.shots) != self.shots or self.shots < 1:
            raise InvalidInputError("shots must be a positive integer", key="shots")
        if not math.isfinite(self.noise_scale) or self.noise_scale < 0:
            raise InvalidInputError("noise_scale must be >= 0", key="noise_scale")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise InvalidInputError("seed must be an unsigned 64-bit integer", key="seed")

    @property
    def point_sigma(self):
        return self.noise_scale / math.sqrt(self.shots)


@dataclass
class DecayCurve:
    tau: np.ndarray
    signal: np.ndarray
    sigma: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
        n = self.tau.size
        if self.tau.ndim != 1 or self.signal.shape != (n,):
            raise InvalidInputError("tau and signal must be 1-D with equal lengths")
        if self.sigma is not None:
            if self.sigma.shape != (n,):
                raise InvalidInputError("sigma must match tau in length", key="sigma")
            if np.any(self.sigma < 0) or not np.all(np.isfinite(self.sigma)):
                raise InvalidInputError("sigma must be finite and >= 0", key="sigma")
        if not (np.all(np.isfinite(self.tau)) and np.all(np.isfinite(self.signal))):
            raise InvalidInputError("tau and signal must be finite")
        if np.any(np.diff(self.tau) <= 0):
            raise InvalidInputError("tau must be strictly increasing", key="tau")

    def __len__(self):
        return self.tau.size


def default_tau_grid(rates: RateParams, n=32, tau_min=0.1):
    """Log-spaced grid from ``tau_min`` to five slowest decay times (us)."""
    positive = [k for k in (rates.sq_decay, rates.dq_decay) if k > 0]
    if not positive:
        raise InvalidInputError("at least one decay constant must be > 0")
    tau_max = 5.0 / (min(positive) * KHZ_US)
    return tuple(np.geomspace(tau_min, tau_max, n))


def rng_for(seed, stream=0):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def model_values(model, rates: RateParams, readout: ReadoutModel, tau):
    if model == "F1":
        return np.array([f1_signal(rates, readout, t) for t in tau])
    if model == "F2":
        return np.array([f2_signal(rates, readout, t) for t in tau])
    if model == "single-exp":
        # total relaxation 1/T1 = 3*omega + gamma on top of the readout baseline
        k = rates.sq_decay + rates.gamma
        return readout.baseline + readout.amplitude * np.exp(-k * np.asarray(tau) * KHZ_US)
    raise InvalidInputError(f"model must be one of {MODELS}, got {model!r}", key="model")


def generate_curve(model, rates: RateParams, readout: ReadoutModel, acq: AcquisitionConfig, stream=0) -> DecayCurve:
    tau = np.array(acq.tau_grid)
    clean = model_values(model, rates, readout, tau)
    sigma = np.full(tau.size, acq.point_sigma)
    if acq.point_sigma > 0:
        signal = clean + acq.point_sigma * rng_for(acq.seed, stream).standard_normal(tau.size)
    else:
        signal = clean
    meta = {
        "protocol": model,
        "omega_khz": rates.omega,
        "gamma_khz": rates.gamma,
        "seed": acq.seed,
        "stream": stream,
    }
    return DecayCurve(tau, signal, sigma, meta)


def paired_f1_f2(rates: RateParams, readout: ReadoutModel, acq: AcquisitionConfig):
    return (
        generate_curve("F1", rates, readout, acq, stream=0),
        generate_curve("F2", rates, readout, acq, stream=1),
    )
