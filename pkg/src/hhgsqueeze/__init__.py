"""Squeezing of high-harmonic field modes from two-time dipole correlations.

The pipeline: a driving pulse (pulse) feeds one of three dipole-response
backends (tdse, sfa, or the analytic oscillator in tdse), whose connected
two-time correlation tables (correlation) are projected onto harmonic
probe frequencies (moments) and mapped to Gaussian states of the emitted
modes (gaussian).  cli wires these into scan / wigner / validate / cache
commands driven by TOML configs (config).
"""

from .correlation import (CorrelationTable, DipoleRecord, list_cache,
                          physics_key, read_table, remove_entry,
                          write_table)
from .errors import (CacheIntegrityError, ConfigError, HhgError,
                     NumericsError)
from .gaussian import (BilinearForm, GaussianState, apply_gaussian_filter,
                       bilinear_from_moments, displace, duan_criterion,
                       log_negativity, major_axis_angle, rotated, wigner)
from .moments import (SpectralMoments, SqueezeRecord, auto_g, cep_scan,
                      chi_displacements, compute_correlation,
                      d_correlation_matrix, spectral_moments,
                      squeeze_record)
from .pulse import (PulseParams, cep_mirror, intensity_to_field,
                    pulse_duration, time_layout, vector_potential,
                    wavelength_to_omega)
from .sfa import SfaParams, sfa_connected_correlation, sfa_dipole_mean
from .tdse import (GridSpec, Harmonic, SoftCoreCoulomb, WaveFunction,
                   dipole_mean, ground_state, oscillator_correlation_table,
                   oscillator_dipole_mean, propagate, two_time_correlation)

__version__ = "0.1.0"

__all__ = [
    "BilinearForm", "CacheIntegrityError", "ConfigError",
    "CorrelationTable", "DipoleRecord", "GaussianState", "GridSpec",
    "Harmonic", "HhgError", "NumericsError", "PulseParams", "SfaParams",
    "SoftCoreCoulomb", "SpectralMoments", "SqueezeRecord", "WaveFunction",
    "apply_gaussian_filter", "auto_g", "bilinear_from_moments",
    "cep_mirror", "cep_scan", "chi_displacements", "compute_correlation",
    "d_correlation_matrix", "dipole_mean", "displace", "duan_criterion",
    "ground_state", "intensity_to_field", "list_cache", "log_negativity",
    "major_axis_angle", "oscillator_correlation_table",
    "oscillator_dipole_mean", "physics_key", "propagate", "pulse_duration",
    "read_table", "remove_entry", "rotated", "sfa_connected_correlation",
    "sfa_dipole_mean", "spectral_moments", "squeeze_record",
    "time_layout", "two_time_correlation", "vector_potential",
    "wavelength_to_omega", "wigner", "write_table",
]
