"""Planar impact modeling toolkit: analytical contact models, parameter
identification, GP-based learned models, and a synthetic impact oracle."""

__version__ = "0.1.0"

from .dynamics import (
    ADMIT_TOL,
    AdmissibilityResult,
    BodyParams,
    ContactGeometry,
    EnergyEllipse,
    ImpactTrial,
    PlanarState,
    apply_impulse,
    apply_wrench,
    contact_jacobian,
    contact_velocity,
    effective_contact_inertia,
    energy_alpha,
    inertia_matrix,
    is_admissible,
    measured_impulse,
    measured_wrench,
    velocity_gap,
    wrench_jacobian,
)
from .errors import (
    ConfigError,
    DatasetFormatError,
    DegenerateContactError,
    GpFitError,
    ImpactLabError,
    NoImpactError,
    SplitLeakageError,
)
