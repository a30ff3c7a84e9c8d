"""Three-level classical rate model, pulse protocols and T1 definitions.

Rates are in kHz and times in microseconds; every exponent is formed as
``rate * tau * 1e-3``. Population vectors are ordered ``(p_-1, p_0, p_+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _backend
from .errors import InvalidInputError, UndefinedRateError

KHZ_US = 1e-3

_UNIFORM = np.full(3, 1.0 / 3.0)
_SYM_MODE = np.array([1.0, -2.0, 1.0])  # decays at 3*omega
_ANTI_MODE = np.array([-1.0, 0.0, 1.0])  # decays at omega + 2*gamma


@dataclass(frozen=True)
class RateParams:
    omega: float  # single-quantum rate, kHz
    gamma: float  # double-quantum rate, kHz

    def __post_init__(self):
        for name in ("omega", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidInputError(f"{name} must be finite", key=name)
            if v < 0:
                raise InvalidInputError(f"{name} must be >= 0, got {v}", key=name)

    @property
    def sq_decay(self):
        """Decay constant of the F1 observable, 3*omega (kHz)."""
        return 3.0 * self.omega

    @property
    def dq_decay(self):
        """Decay constant of the F2 observable, omega + 2*gamma (kHz)."""
        return self.omega + 2.0 * self.gamma


@dataclass(frozen=True)
class Populations:
    p_minus: float
    p_zero: float
    p_plus: float

    def __post_init__(self):
        vals = (self.p_minus, self.p_zero, self.p_plus)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidInputError("populations must be finite")
        if any(v < -1e-9 or v > 1 + 1e-9 for v in vals):
            raise InvalidInputError(f"populations must lie in [0, 1], got {vals}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise InvalidInputError(f"populations must sum to 1, got {sum(vals)!r}")

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(x) for x in arr))

    def as_array(self):
        return np.array([self.p_minus, self.p_zero, self.p_plus])


POLARIZED = Populations(0.0, 1.0, 0.0)


class Init(str, Enum):
    POLARIZE = "polarize-only"
    PI_PLUS = "polarize-then-pi+"
    PI_MINUS = "polarize-then-pi-"


class Read(str, Enum):
    DIRECT = "direct"
    PI_PLUS = "pi+-then-read"
    PI_MINUS = "pi--then-read"


@dataclass(frozen=True)
class Protocol:
    init: Init = Init.POLARIZE
    read: Read = Read.DIRECT
    label: str = ""

    def __post_init__(self):
        try:
            object.__setattr__(self, "init", Init(self.init))
            object.__setattr__(self, "read", Read(self.read))
        except ValueError as exc:
            raise InvalidInputError(str(exc), key="protocol") from None


@dataclass(frozen=True)
class ReadoutModel:
    amplitude: float = 1.0
    baseline: float = 0.0
    pulse_fidelity: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise InvalidInputError("amplitude must be > 0", key="amplitude")
        if not math.isfinite(self.baseline):
            raise InvalidInputError("baseline must be finite", key="baseline")
        if not (0.0 <= self.pulse_fidelity <= 1.0):
            raise InvalidInputError("pulse_fidelity must lie in [0, 1]", key="pulse_fidelity")


def _as_vector(p):
    if isinstance(p, Populations):
        return p.as_array()
    return Populations.from_array(p).as_array()


def _check_tau(tau):
    if not math.isfinite(tau) or tau < 0:
        raise InvalidInputError(f"tau must be finite and >= 0, got {tau}", key="tau")


def rate_generator(rates: RateParams) -> np.ndarray:
    """Generator G of ``dp/dt = G p`` in kHz; columns sum to zero."""
    om, ga = rates.omega, rates.gamma
    return np.array(
        [
            [-(om + ga), om, ga],
            [om, -2.0 * om, om],
            [ga, om, -(om + ga)],
        ]
    )


def evolve_analytic(p, rates: RateParams, tau: float) -> Populations:
    """Exact evolution over ``tau`` microseconds via the generator's eigenmodes."""
    _check_tau(tau)
    v = _as_vector(p)
    sym = (v @ _SYM_MODE) / 6.0
    anti = (v @ _ANTI_MODE) / 2.0
    e_sq = math.exp(-rates.sq_decay * tau * KHZ_US)
    e_dq = math.exp(-rates.dq_decay * tau * KHZ_US)
    out = _UNIFORM + sym * e_sq * _SYM_MODE + anti * e_dq * _ANTI_MODE
    return Populations.from_array(np.clip(out, 0.0, 1.0))


def evolve_numeric(p, rates: RateParams, tau: float, step: float) -> Populations:
    """Fixed-step RK4 integration; the step is shrunk to divide ``tau`` evenly."""
    _check_tau(tau)
    if not math.isfinite(step) or step <= 0:
        raise InvalidInputError(f"step must be > 0, got {step}", key="step")
    v = _as_vector(p)
    nsteps = int(math.ceil(tau / step - 1e-9)) if tau > 0 else 0
    out = _backend.rk4_populations(
        float(v[0]), float(v[1]), float(v[2]), rates.omega, rates.gamma, float(tau), nsteps
    )
    return Populations.from_array(np.clip(out, 0.0, 1.0))


def _pi_pulse(v, target, fidelity):
    # population swap |0> <-> |target>, mixed linearly with identity
    j = 2 if target == "+" else 0
    swapped = v.copy()
    swapped[1], swapped[j] = v[j], v[1]
    return fidelity * swapped + (1.0 - fidelity) * v


def simulate_protocol(protocol: Protocol, rates: RateParams, readout: ReadoutModel, tau: float) -> float:
    v = POLARIZED.as_array()
    f = readout.pulse_fidelity
    if protocol.init is Init.PI_PLUS:
        v = _pi_pulse(v, "+", f)
    elif protocol.init is Init.PI_MINUS:
        v = _pi_pulse(v, "-", f)
    v = evolve_analytic(v, rates, tau).as_array()
    if protocol.read is Read.PI_PLUS:
        v = _pi_pulse(v, "+", f)
    elif protocol.read is Read.PI_MINUS:
        v = _pi_pulse(v, "-", f)
    return readout.baseline + readout.amplitude * v[1]


F1_PAIR = (Protocol(Init.POLARIZE, Read.DIRECT, "F1 ref"), Protocol(Init.PI_PLUS, Read.DIRECT, "F1 sig"))
F2_PAIR = (Protocol(Init.PI_PLUS, Read.PI_PLUS, "F2 ref"), Protocol(Init.PI_PLUS, Read.PI_MINUS, "F2 sig"))


def f1_signal(rates: RateParams, readout: ReadoutModel, tau: float) -> float:
    """SQ observable: read |0> after preparing |0> minus after preparing |+1>.

    Equals ``r * exp(-3 omega tau)`` for ideal pulses.
    """
    a, b = F1_PAIR
    return simulate_protocol(a, rates, readout, tau) - simulate_protocol(b, rates, readout, tau)


def f2_signal(rates: RateParams, readout: ReadoutModel, tau: float) -> float:
    """DQ observable: from |+1>, read |+1> minus read |-1>.

    Equals ``r * exp(-(2 gamma + omega) tau)`` for ideal pulses.
    """
    a, b = F2_PAIR
    return simulate_protocol(a, rates, readout, tau) - simulate_protocol(b, rates, readout, tau)


def t1_full(rates: RateParams) -> float:
    """Spin relaxation time 1/(3 omega + gamma) in microseconds."""
    total = 3.0 * rates.omega + rates.gamma
    if total <= 0:
        raise UndefinedRateError("3*omega + gamma must be > 0")
    return 1.0 / (total * KHZ_US)


def t1_conventional(rates: RateParams) -> float:
    """Conventional relaxation time 1/(3 omega), ignoring gamma, in microseconds."""
    if rates.omega <= 0:
        raise UndefinedRateError("omega must be > 0")
    return 1.0 / (3.0 * rates.omega * KHZ_US)
