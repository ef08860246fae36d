"""Sampler ODE integration and kinetic-energy instrumentation."""

from fmkinetics.transport.energies import EnergyTable, batch_energies, read_energy_csv, write_frame_csv
from fmkinetics.transport.integrator import (
    IntegrationMethod,
    IntegratorConfig,
    Trajectory,
    TrajectoryBatch,
    affine_energy_bound_check,
    energy_bound_check,
    integrate,
    integrate_batch,
    trajectory_energy,
    trajectory_norm_bound_check,
)

__all__ = [
    "EnergyTable",
    "IntegrationMethod",
    "IntegratorConfig",
    "Trajectory",
    "TrajectoryBatch",
    "affine_energy_bound_check",
    "batch_energies",
    "energy_bound_check",
    "integrate",
    "integrate_batch",
    "read_energy_csv",
    "trajectory_energy",
    "trajectory_norm_bound_check",
    "write_frame_csv",
]
