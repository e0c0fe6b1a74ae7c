"""Chiral random band matrices at zero energy.

Sampling of Ginibre/GUE blocks, block-tridiagonal Hamiltonians, exact and
numerical Green's function blocks, Lyapunov spectra of Ginibre products and
Monte Carlo decay scans.
"""
__version__ = "0.1.0"

from .sampling import InvalidDimensionError, RngStream, sample_ginibre, sample_gue
from .model import (
    BlockTridiagonalOperator,
    ChiralOperator,
    anticommutator_norm,
    build_chiral_model,
    build_full_model,
    build_general_chiral_model,
    to_dense,
)
from .resolvent import (
    NearSpectrumError,
    NotInvertibleError,
    SingularMatrixError,
    dagger_inverse,
    fractional_moment_estimate,
    log_norm_corner,
    resolvent_block,
    zero_energy_corner_block,
)
from .lyapunov import (
    FactorGenerator,
    LyapunovEstimate,
    complex_ginibre_exponent,
    digamma_half_integer,
    estimate_lyapunov,
    newman_asymptotic,
    newman_exponent,
    qr_step,
)
from .experiments import (
    ConfigError,
    DecayScanConfig,
    FmcScanConfig,
    fit_exponential_decay,
    fit_power_law,
    run_decay_scan,
    run_fractional_moment_scan,
)
