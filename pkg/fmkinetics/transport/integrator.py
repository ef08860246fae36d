from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid

from fmkinetics.analysis.ot import AffineGrowthConstants, rf_energy_factor
from fmkinetics.config import DEFAULT_METHOD, DEFAULT_STEPS, DEFAULT_T_END, DIVERGENCE_LIMIT
from fmkinetics.core.errors import DomainError, IntegrationDivergedError
from fmkinetics.core.models import Dataset
from fmkinetics.fields.base import VelocityField

logger = logging.getLogger(__name__)


class IntegrationMethod(str, Enum):
    EULER = "euler"
    RK4 = "rk4"


@dataclass(frozen=True, slots=True)
class IntegratorConfig:
    method: IntegrationMethod = IntegrationMethod(DEFAULT_METHOD)
    steps: int = DEFAULT_STEPS
    t_end: float = DEFAULT_T_END

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", IntegrationMethod(self.method))

    def validate(self, field: VelocityField) -> None:
        if self.steps < 1:
            raise DomainError(f"steps must be at least 1, got {self.steps}")
        if not 0.0 < self.t_end <= field.t_max:
            raise DomainError(f"t_end={self.t_end} must lie in (0, {field.t_max}]")

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.steps + 1)


@dataclass(frozen=True, slots=True, eq=False)
class Trajectory:
    times: np.ndarray       # (S + 1,)
    states: np.ndarray      # (S + 1, d)
    velocities: np.ndarray  # (S + 1, d)
    kinetic: np.ndarray     # (S + 1,)
    integrated_energy: float

    @property
    def x0(self) -> np.ndarray:
        return self.states[0]

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def recompute_energy(self) -> float:
        return trajectory_energy(self.kinetic, self.times)


@dataclass(frozen=True, slots=True, eq=False)
class TrajectoryBatch:
    """Integrated trajectories for a block of initial points; states are optional."""

    times: np.ndarray                # (S + 1,)
    kinetic: np.ndarray              # (B, S + 1)
    energies: np.ndarray             # (B,)
    endpoints: np.ndarray            # (B, d)
    states: np.ndarray | None = None      # (B, S + 1, d)
    velocities: np.ndarray | None = None  # (B, S + 1, d)

    def __len__(self) -> int:
        return int(self.kinetic.shape[0])

    def trajectory(self, row: int) -> Trajectory:
        if self.states is None or self.velocities is None:
            raise ValueError("batch was integrated without recording states")
        return Trajectory(
            times=self.times,
            states=self.states[row],
            velocities=self.velocities[row],
            kinetic=self.kinetic[row],
            integrated_energy=float(self.energies[row]),
        )


def trajectory_energy(kinetic: np.ndarray, times: np.ndarray) -> float:
    return float(trapezoid(np.ascontiguousarray(kinetic), np.ascontiguousarray(times)))


def _diverged_rows(z: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(z) | (np.abs(z) > DIVERGENCE_LIMIT)
    return np.flatnonzero(bad.any(axis=-1))


def _advance(field: VelocityField, method: IntegrationMethod, t0: float, t1: float, z: np.ndarray, v0: np.ndarray) -> np.ndarray:
    h = t1 - t0
    if method is IntegrationMethod.EULER:
        return z + h * v0
    tm = 0.5 * (t0 + t1)
    k2 = field.velocity(tm, z + 0.5 * h * v0)
    k3 = field.velocity(tm, z + 0.5 * h * k2)
    k4 = field.velocity(t1, z + h * k3)
    return z + (h / 6.0) * (v0 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_batch(
    field: VelocityField,
    x0s: np.ndarray,
    config: IntegratorConfig,
    *,
    record_states: bool = True,
) -> TrajectoryBatch:
    """Fixed-step integration of dz/dt = v(t, z) for every row of ``x0s``.

    Raises IntegrationDivergedError with the step index and the row of the first
    diverging trajectory; nothing is returned for a diverged batch.
    """
    config.validate(field)
    z = np.array(np.atleast_2d(x0s), dtype=np.float64, copy=True)
    if z.shape[1] != field.dim:
        raise ValueError(f"initial points have dimension {z.shape[1]}, field expects {field.dim}")
    bad = _diverged_rows(z)
    if bad.size:
        raise IntegrationDivergedError(0, int(bad[0]))

    times = config.grid()
    n_rows, n_nodes = z.shape[0], times.shape[0]
    kinetic = np.empty((n_rows, n_nodes))
    states = np.empty((n_rows, n_nodes, field.dim)) if record_states else None
    velocities = np.empty((n_rows, n_nodes, field.dim)) if record_states else None

    v = field.velocity(float(times[0]), z)
    for k in range(n_nodes):
        if k > 0:
            z = _advance(field, config.method, float(times[k - 1]), float(times[k]), z, v)
            bad = _diverged_rows(z)
            if bad.size:
                logger.warning("Integration diverged at step %d (row %d)", k, int(bad[0]))
                raise IntegrationDivergedError(k, int(bad[0]))
            v = field.velocity(float(times[k]), z)
            bad = _diverged_rows(v)
            if bad.size:
                raise IntegrationDivergedError(k, int(bad[0]))
        kinetic[:, k] = np.sum(v * v, axis=-1)
        if record_states:
            states[:, k] = z
            velocities[:, k] = v

    energies = np.array([trajectory_energy(kinetic[i], times) for i in range(n_rows)])
    return TrajectoryBatch(
        times=times,
        kinetic=kinetic,
        energies=energies,
        endpoints=z,
        states=states,
        velocities=velocities,
    )


def integrate(field: VelocityField, x0: np.ndarray, config: IntegratorConfig) -> Trajectory:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1:
        raise ValueError(f"x0 must be a single point, got shape {x0.shape}")
    try:
        batch = integrate_batch(field, x0[None, :], config)
    except IntegrationDivergedError as exc:
        raise IntegrationDivergedError(exc.step) from None
    return batch.trajectory(0)


def trajectory_norm_bound_check(trajectory: Trajectory, dataset: Dataset) -> bool:
    """Check ||psi_t|| <= (||x0|| + M t) / (1 - t) at every node of an RF trajectory."""
    t = trajectory.times
    x0_norm = float(np.linalg.norm(trajectory.x0))
    bound = (x0_norm + dataset.max_norm * t) / (1.0 - t) + 1e-8 * (1.0 + x0_norm)
    return bool(np.all(np.linalg.norm(trajectory.states, axis=-1) <= bound))


def energy_bound_check(trajectory: Trajectory, dataset: Dataset) -> bool:
    """Check E_T <= c3(T) (||x0||^2 + M^2) for an RF trajectory.

    The pointwise kinetic bound 2 (||x0||^2 + M^2) / (1 - t)^4 is convex, so its
    trapezoid sum on the integration grid exceeds its exact integral; that
    overshoot is granted as quadrature slack.
    """
    t = trajectory.times
    T = trajectory.t_end
    scale = float(np.dot(trajectory.x0, trajectory.x0)) + dataset.max_norm**2
    exact = rf_energy_factor(T)
    quadrature = trajectory_energy(2.0 / (1.0 - t) ** 4, t)
    bound = max(exact, quadrature) * scale
    return trajectory.integrated_energy <= bound * (1.0 + 1e-10) + 1e-12


def affine_energy_bound_check(trajectory: Trajectory, constants: AffineGrowthConstants) -> bool:
    """Check E_T <= C_E(T) (||x0||^2 + 1) using Gronwall constants of an affine-growth field."""
    if trajectory.t_end > constants.horizon + 1e-12:
        raise DomainError(f"trajectory runs to {trajectory.t_end}, constants cover [0, {constants.horizon}]")
    scale = float(np.dot(trajectory.x0, trajectory.x0)) + 1.0
    return trajectory.integrated_energy <= constants.energy_constant * scale * (1.0 + 1e-10)
