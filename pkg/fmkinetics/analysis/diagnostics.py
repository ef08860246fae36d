from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np
from scipy.spatial import KDTree

from fmkinetics.config import FD_STEP_SCALE
from fmkinetics.core.errors import DomainError
from fmkinetics.fields.base import VelocityField
from fmkinetics.fields.empirical import EmpiricalField

logger = logging.getLogger(__name__)


def default_fd_step(z: np.ndarray) -> float:
    return FD_STEP_SCALE * (1.0 + float(np.linalg.norm(z)))


def _check_step(h: float) -> None:
    if not h > 0.0:
        raise DomainError(f"finite-difference step must be positive, got {h}")


@dataclass(frozen=True, slots=True, eq=False)
class AsymmetryReport:
    t: float
    z: np.ndarray
    jacobian: np.ndarray
    asym_norm: float
    skew_sum_norm: float
    fd_step: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "z": [float(v) for v in self.z],
            "asym_norm": self.asym_norm,
            "skew_sum_norm": None if np.isnan(self.skew_sum_norm) else self.skew_sum_norm,
            "fd_step": self.fd_step,
        }


def jacobian_fd(field: VelocityField, t: float, z: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Jacobian; column k is (v(z + h e_k) - v(z - h e_k)) / 2h."""
    _check_step(h)
    z = np.asarray(z, dtype=np.float64)
    d = z.shape[-1]
    offsets = h * np.eye(d)
    # rows 0..d-1 are forward probes, d..2d-1 backward
    v = field.velocity(t, np.concatenate([z + offsets, z - offsets]))
    return ((v[:d] - v[d:]) / (2.0 * h)).T


def skew_condition_sum(field: EmpiricalField, t: float, z: np.ndarray, h: float, *, analytic: bool = False) -> np.ndarray:
    """sum_i (v_i grad w_i^T - grad w_i v_i^T) with analytic v_i.

    Weight gradients come from central differences with step ``h`` unless
    ``analytic`` is set.
    """
    z = np.asarray(z, dtype=np.float64)
    if not analytic:
        _check_step(h)
    v = field.conditional_velocities(t, z)
    g = field.weight_gradients(t, z, None if analytic else h)
    outer = v.T @ g
    return outer - outer.T


def asymmetry_report(field: VelocityField, t: float, z: np.ndarray, h: float | None = None) -> AsymmetryReport:
    z = np.asarray(z, dtype=np.float64)
    h = default_fd_step(z) if h is None else h
    jac = jacobian_fd(field, t, z, h)
    asym = float(np.linalg.norm(0.5 * (jac - jac.T), ord="fro"))
    skew = float("nan")
    if isinstance(field, EmpiricalField):
        skew = float(np.linalg.norm(skew_condition_sum(field, t, z, h), ord="fro"))
    return AsymmetryReport(t=float(t), z=z, jacobian=jac, asym_norm=asym, skew_sum_norm=skew, fd_step=h)


def asymmetry_grid(
    field: VelocityField,
    times: Iterable[float],
    points: np.ndarray,
    h: float | None = None,
) -> list[AsymmetryReport]:
    reports = [asymmetry_report(field, float(t), z, h) for t in times for z in np.atleast_2d(points)]
    logger.info("Evaluated %d asymmetry probes", len(reports))
    return reports


def continuity_residual(field: EmpiricalField, t: float, z: np.ndarray, h_t: float, h_z: float) -> float:
    """Central-difference estimate of d/dt p(t, z) + div(p v)(t, z) for the empirical path."""
    _check_step(h_t)
    _check_step(h_z)
    if not (0.0 < t - h_t and t + h_t < field.t_max):
        raise DomainError(f"time stencil [{t - h_t}, {t + h_t}] must lie inside (0, {field.t_max})")
    z = np.asarray(z, dtype=np.float64)
    d = z.shape[-1]

    dp_dt = (np.exp(field.log_density(t + h_t, z)) - np.exp(field.log_density(t - h_t, z))) / (2.0 * h_t)

    offsets = h_z * np.eye(d)
    probes = np.concatenate([z + offsets, z - offsets])
    flux = np.exp(field.log_density(t, probes))[:, None] * field.velocity(t, probes)
    divergence = float(np.sum(np.diag(flux[:d] - flux[d:]))) / (2.0 * h_z)
    return float(dp_dt + divergence)


def relative_continuity_residual(field: EmpiricalField, t: float, z: np.ndarray, h_t: float, h_z: float) -> float:
    """continuity_residual divided by the mixture density at (t, z)."""
    return continuity_residual(field, t, z, h_t, h_z) / float(np.exp(field.log_density(t, z)))


@dataclass(frozen=True, slots=True)
class MemorizationStats:
    count: int
    min: float
    mean: float
    median: float
    q05: float
    q25: float
    q75: float
    q95: float
    max: float

    def to_dict(self) -> dict[str, float | int]:
        return {name: getattr(self, name) for name in self.__slots__}


def nearest_distances(field: EmpiricalField, endpoints: np.ndarray) -> np.ndarray:
    endpoints = np.atleast_2d(np.asarray(endpoints, dtype=np.float64))
    distances, _ = KDTree(field.dataset.points).query(endpoints, k=1)
    return np.asarray(distances, dtype=np.float64)


def memorization_proxy(field: EmpiricalField, endpoints: np.ndarray) -> MemorizationStats:
    """Distribution of distances from generated endpoints to their nearest training point."""
    endpoints = np.atleast_2d(np.asarray(endpoints, dtype=np.float64))
    if endpoints.shape[0] == 0 or endpoints.size == 0:
        raise DomainError("memorization_proxy needs at least one endpoint")
    dist = nearest_distances(field, endpoints)
    q05, q25, median, q75, q95 = np.quantile(dist, [0.05, 0.25, 0.5, 0.75, 0.95])
    return MemorizationStats(
        count=int(dist.size),
        min=float(dist.min()),
        mean=float(dist.mean()),
        median=float(median),
        q05=float(q05),
        q25=float(q25),
        q75=float(q75),
        q95=float(q95),
        max=float(dist.max()),
    )
