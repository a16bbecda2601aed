"""1D electromagnetic wave solvers with pole-residue dispersion.

A colocated lattice-Boltzmann solver (exact vacuum propagation, stable for
impulsive broadband launches), a reference staggered-grid FDTD solver sharing
the identical dispersion coefficients, an analytic slab-transmittance oracle,
spectral analysis utilities, and a config-driven experiment harness.
"""

from .analytic import SlabSpec, slab_transmittance, transmittance_curve
from .config import ExperimentConfig, SlabConfig, SweepConfig, load_config, preset
from .errors import ConfigError, DispersimError, NumericalInstabilityError, SteadyStateError
from .harness import RunReport, run_experiment, run_preset
from .materials import (
    DimensionlessPoles,
    PolePair,
    PoleResidueModel,
    UpdateCoefficients,
    ag_palik_model,
    debye_pole,
    dimensionless,
    lorentz_pole,
    model_by_name,
    model_from_dict,
    permittivity,
    refractive_index,
    relative_permittivity,
    solver_coefficients,
    update_coefficients,
)
from .sources import SourceSpec, delta_init, inject, ricker_value, sine_value
from .spectral import (
    ErrorNorms,
    Spectrum,
    TimeSeries,
    error_norms,
    fft_series,
    photon_energy_axis,
    poynting_average,
    psd,
    transmittance_from_psd,
)

__version__ = "0.1.0"
