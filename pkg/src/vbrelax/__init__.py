"""Relaxometry simulation and inference for spin-1 defects in hBN."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import InvalidInputError, OutOfRangeError, UndefinedRateError, VBRelaxError
from .fitting import (
    FitResult,
    PowerLawFit,
    RateEstimate,
    TempLawFit,
    default_init,
    extract_rates,
    fit_decay,
    fit_power_law,
    fit_temperature_law,
    power_law,
)
from .noise import (
    NoisePoint,
    NoiseSpectrum,
    Susceptibility,
    build_spectrum,
    electric_noise,
    suppression,
)
from .rates import (
    Init,
    Populations,
    Protocol,
    RateParams,
    Read,
    ReadoutModel,
    evolve_analytic,
    evolve_numeric,
    f1_signal,
    f2_signal,
    rate_generator,
    simulate_protocol,
    t1_conventional,
    t1_full,
)
from .spin import (
    DefectParams,
    FieldConfig,
    SpinLevels,
    build_hamiltonian,
    depth_for_energy,
    dq_splitting,
    odmr_frequencies,
    spin_levels,
    zeeman_splitting,
)
from .synth import AcquisitionConfig, DecayCurve, default_tau_grid, generate_curve, paired_f1_f2
