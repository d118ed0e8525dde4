"""Simulator and analysis toolkit for path-entangled microwave radiation
from a two-port kinetic-inductance parametric amplifier."""

from .cavity import (
    GainPair,
    HeatingModel,
    KineticInductanceParams,
    PumpConfig,
    ResonatorParams,
    epr_parameter,
    fit_pump_sweep,
    gain_parameters,
    kinetic_inductance,
    output_covariance,
    quadrature_variances,
    reflection_coefficient,
)
from .errors import (
    ConfigurationError,
    FitError,
    InstabilityError,
    KipasimError,
    NumericalDomainError,
    UnderdeterminedError,
    ValidationError,
)
from .gaussian import (
    CovarianceMatrix2M,
    DetectorAngles,
    SymplecticSpectrum,
    duan_epr,
    log_negativity,
    rotate_phase,
    symplectic_eigenvalues,
    thermal_cm,
    vacuum_cm,
)

__version__ = "0.1.0"

__all__ = [
    "CovarianceMatrix2M",
    "DetectorAngles",
    "SymplecticSpectrum",
    "GainPair",
    "HeatingModel",
    "KineticInductanceParams",
    "PumpConfig",
    "ResonatorParams",
    "ConfigurationError",
    "FitError",
    "InstabilityError",
    "KipasimError",
    "NumericalDomainError",
    "UnderdeterminedError",
    "ValidationError",
    "duan_epr",
    "epr_parameter",
    "fit_pump_sweep",
    "gain_parameters",
    "kinetic_inductance",
    "log_negativity",
    "output_covariance",
    "quadrature_variances",
    "reflection_coefficient",
    "rotate_phase",
    "symplectic_eigenvalues",
    "thermal_cm",
    "vacuum_cm",
]
