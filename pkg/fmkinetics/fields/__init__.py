from fmkinetics.fields.base import CallableField, VelocityField
from fmkinetics.fields.empirical import (
    EmpiricalField,
    empirical_log_density,
    empirical_velocity,
    rectified_gaussian_field,
    rf_softmax_velocity,
    weights,
)
from fmkinetics.fields.population import (
    PopulationGaussianField,
    population_gaussian_velocity,
    population_score,
)

__all__ = [
    "CallableField",
    "EmpiricalField",
    "PopulationGaussianField",
    "VelocityField",
    "empirical_log_density",
    "empirical_velocity",
    "population_gaussian_velocity",
    "population_score",
    "rectified_gaussian_field",
    "rf_softmax_velocity",
    "weights",
]
