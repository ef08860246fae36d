"""Datasets, source kernels, affine schedules and source sampling."""

from fmkinetics.core.errors import (
    ConfigError,
    DatasetValidationError,
    DomainError,
    FlowKineticsError,
    InsufficientDataError,
    IntegrationDivergedError,
    NumericalError,
    ScheduleError,
    TailFitError,
)
from fmkinetics.core.io import load_dataset, load_gaussian_params, save_dataset_csv
from fmkinetics.core.models import Dataset, GaussianParams, KernelKind, SourceKernel
from fmkinetics.core.sampling import generate_dataset, sample_source, sample_source_rows
from fmkinetics.core.schedules import (
    AffineSchedule,
    affine_coefficients,
    check_boundary_conditions,
    conditional_log_density,
    load_custom_schedule,
    rectified_flow,
    regularized_rectified_flow,
    trigonometric_flow,
)

__all__ = [
    "AffineSchedule",
    "ConfigError",
    "Dataset",
    "DatasetValidationError",
    "DomainError",
    "FlowKineticsError",
    "GaussianParams",
    "InsufficientDataError",
    "IntegrationDivergedError",
    "KernelKind",
    "NumericalError",
    "ScheduleError",
    "SourceKernel",
    "TailFitError",
    "affine_coefficients",
    "check_boundary_conditions",
    "conditional_log_density",
    "generate_dataset",
    "load_custom_schedule",
    "load_dataset",
    "load_gaussian_params",
    "rectified_flow",
    "regularized_rectified_flow",
    "sample_source",
    "sample_source_rows",
    "save_dataset_csv",
    "trigonometric_flow",
]
