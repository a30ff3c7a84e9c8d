"""Ground-state spin-1 Hamiltonian, level structure and ODMR frequencies.

Matrices are written in the ordered basis ``(|-1>, |0>, |+1>)``. Energies
and frequencies are ordinary frequencies in MHz, fields in gauss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, OutOfRangeError

BOHR_MHZ_PER_GAUSS = 1.3996245


@dataclass(frozen=True)
class PhysicalConstants:
    bohr_frequency_per_gauss: float = BOHR_MHZ_PER_GAUSS


CONSTANTS = PhysicalConstants()

_SQ2 = 1.0 / math.sqrt(2.0)
SZ = np.diag([-1.0, 0.0, 1.0]).astype(complex)
SX = np.array([[0, _SQ2, 0], [_SQ2, 0, _SQ2], [0, _SQ2, 0]], dtype=complex)
SY = np.array(
    [[0, 1j * _SQ2, 0], [-1j * _SQ2, 0, 1j * _SQ2], [0, -1j * _SQ2, 0]],
    dtype=complex,
)
IDENTITY = np.eye(3, dtype=complex)

# nitrogen implantation energy (keV) -> most probable defect depth (nm)
DEPTH_TABLE = ((2.5, 4.8), (5.0, 9.2), (7.5, 14.5))


def _finite(name, value):
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}", key=name)


@dataclass(frozen=True)
class DefectParams:
    """Static constants of one defect ensemble.

    ``d_gs`` and ``e_gs`` are the zero-field splitting parameters in MHz.
    The default ``e_gs`` of 48 MHz is the low end of the reported range and
    should be overridden per sample.
    """

    d_gs: float = 3480.0
    e_gs: float = 48.0
    g_factor: float = 2.0
    depth: float | None = None
    label: str = ""

    def __post_init__(self):
        for name in ("d_gs", "e_gs", "g_factor"):
            _finite(name, getattr(self, name))
        if self.d_gs <= 0:
            raise InvalidInputError("d_gs must be > 0", key="d_gs")
        if self.e_gs < 0:
            raise InvalidInputError("e_gs must be >= 0", key="e_gs")
        if self.g_factor <= 0:
            raise InvalidInputError("g_factor must be > 0", key="g_factor")
        if self.depth is not None:
            _finite("depth", self.depth)
            if self.depth <= 0:
                raise InvalidInputError("depth must be > 0", key="depth")

    @property
    def gyromagnetic(self):
        """Electron gyromagnetic ratio g*mu_B/h in MHz/G."""
        return self.g_factor * CONSTANTS.bohr_frequency_per_gauss


@dataclass(frozen=True)
class FieldConfig:
    """Static magnetic field; angles in radians relative to the c-axis."""

    b_magnitude: float = 0.0
    polar_angle: float = 0.0
    azimuth: float = 0.0

    def __post_init__(self):
        for name in ("b_magnitude", "polar_angle", "azimuth"):
            _finite(name, getattr(self, name))
        if self.b_magnitude < 0:
            raise InvalidInputError("b_magnitude must be >= 0", key="b_magnitude")

    @property
    def components(self):
        b, th, ph = self.b_magnitude, self.polar_angle, self.azimuth
        return (
            b * math.sin(th) * math.cos(ph),
            b * math.sin(th) * math.sin(ph),
            b * math.cos(th),
        )

    @property
    def is_axial(self):
        return self.b_magnitude == 0.0 or math.sin(self.polar_angle) == 0.0


@dataclass(frozen=True)
class SpinLevels:
    energies: np.ndarray  # (3,) ascending, MHz
    states: np.ndarray  # (3, 3); column k is the eigenvector of energies[k]

    def zero_like_index(self):
        """Index of the level with the largest |0> weight."""
        return int(np.argmax(np.abs(self.states[1, :]) ** 2))


def build_hamiltonian(params: DefectParams, field: FieldConfig) -> np.ndarray:
    d, e, gam = params.d_gs, params.e_gs, params.gyromagnetic
    bx, by, bz = field.components
    zfs = d * (SZ @ SZ - (2.0 / 3.0) * IDENTITY) + e * (SX @ SX - SY @ SY)
    zeeman = gam * (bx * SX + by * SY + bz * SZ)
    h = zfs + zeeman
    return 0.5 * (h + h.conj().T)


def spin_levels(h) -> SpinLevels:
    h = np.asarray(h, dtype=complex)
    if h.shape != (3, 3):
        raise InvalidInputError(f"expected a 3x3 matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise InvalidInputError("matrix has non-finite entries")
    if np.max(np.abs(h - h.conj().T)) > 1e-9:
        raise InvalidInputError("matrix is not Hermitian within 1e-9")
    energies, states = np.linalg.eigh(h)
    return SpinLevels(energies=energies, states=states)


def axial_levels(params: DefectParams, b_gauss: float) -> np.ndarray:
    """Closed-form level energies for a field along the c-axis, ascending.

    For an axial field ``|0>`` decouples at ``-2D/3`` and the ``|+-1>`` block
    has eigenvalues ``D/3 +- sqrt(b**2 + E**2)`` with ``b = g*mu_B*B/h``.
    """
    b = params.gyromagnetic * b_gauss
    root = math.hypot(b, params.e_gs)
    d = params.d_gs
    return np.sort(np.array([-2.0 * d / 3.0, d / 3.0 - root, d / 3.0 + root]))


def odmr_frequencies(params: DefectParams, field: FieldConfig, method="auto"):
    """Transition frequencies ``(nu_minus, nu_plus)`` from the |0>-like level.

    ``method`` is ``"auto"`` (closed form for axial fields, eigensolve
    otherwise), ``"closed"`` or ``"eigen"``.
    """
    if method not in ("auto", "closed", "eigen"):
        raise InvalidInputError(f"unknown method {method!r}", key="method")
    if method == "closed" and not field.is_axial:
        raise InvalidInputError("closed form requires an axial field", key="method")
    if method == "closed" or (method == "auto" and field.is_axial):
        b = params.gyromagnetic * field.b_magnitude * math.cos(field.polar_angle)
        root = math.hypot(b, params.e_gs)
        return params.d_gs - root, params.d_gs + root
    levels = spin_levels(build_hamiltonian(params, field))
    k0 = levels.zero_like_index()
    others = np.delete(levels.energies, k0) - levels.energies[k0]
    lo, hi = sorted(others)
    return float(lo), float(hi)


def dq_splitting(params: DefectParams, field: FieldConfig, method="auto") -> float:
    """Separation ``nu_plus - nu_minus`` of the two ODMR lines in MHz."""
    lo, hi = odmr_frequencies(params, field, method=method)
    return hi - lo


def zeeman_splitting(params: DefectParams, field: FieldConfig) -> float:
    """Bare Zeeman splitting ``2 g mu_B B / h`` in MHz, ignoring E."""
    return 2.0 * params.gyromagnetic * field.b_magnitude


SPLITTING_KINDS = ("odmr", "zeeman")


def splitting(params: DefectParams, field: FieldConfig, kind="odmr") -> float:
    if kind == "odmr":
        return dq_splitting(params, field)
    if kind == "zeeman":
        return zeeman_splitting(params, field)
    raise InvalidInputError(f"kind must be one of {SPLITTING_KINDS}", key="kind")


def depth_for_energy(implant_energy: float) -> float:
    """Most probable defect depth (nm) for a nitrogen implantation energy (keV).

    Linear interpolation over the three tabulated SRIM depths. No
    extrapolation outside 2.5-7.5 keV.
    """
    energies = [e for e, _ in DEPTH_TABLE]
    if not math.isfinite(implant_energy) or not (
        energies[0] <= implant_energy <= energies[-1]
    ):
        raise OutOfRangeError(
            f"implant energy {implant_energy} keV outside "
            f"[{energies[0]}, {energies[-1]}] keV",
            key="implant_energy",
        )
    return float(np.interp(implant_energy, energies, [d for _, d in DEPTH_TABLE]))
