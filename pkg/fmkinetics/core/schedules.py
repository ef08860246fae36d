"""Affine conditional flows psi_t(z | x) = m_t(x) + sigma_t(x) z.

Schedule callables take a scalar time and an (N, d) array of data points and
return (N, d) arrays for ``m``/``m_dot`` and (N,) arrays for ``sigma``/``sigma_dot``.
"""

from __future__ import annotations

import importlib
import logging
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from fmkinetics.core.errors import DomainError, ScheduleError
from fmkinetics.core.models import SourceKernel

logger = logging.getLogger(__name__)

VectorFn = Callable[[float, np.ndarray], np.ndarray]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class AffineSchedule:
    m: VectorFn
    m_dot: VectorFn
    sigma: VectorFn
    sigma_dot: VectorFn
    name: str

    def evaluate(self, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return (m, m_dot, sigma, sigma_dot) at time t for rows of x."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self.m(t, x), self.m_dot(t, x), self.sigma(t, x), self.sigma_dot(t, x)


def _linear_mean(t: float, x: np.ndarray) -> np.ndarray:
    return t * x


def _linear_mean_dot(t: float, x: np.ndarray) -> np.ndarray:
    return np.array(x, dtype=np.float64, copy=True)


def _linear_sigma(t: float, x: np.ndarray, sigma_min: float) -> np.ndarray:
    return np.full(x.shape[0], 1.0 - (1.0 - sigma_min) * t)


def _linear_sigma_dot(t: float, x: np.ndarray, sigma_min: float) -> np.ndarray:
    return np.full(x.shape[0], -(1.0 - sigma_min))


def _trig_mean(t: float, x: np.ndarray) -> np.ndarray:
    return np.sin(0.5 * np.pi * t) * x


def _trig_mean_dot(t: float, x: np.ndarray) -> np.ndarray:
    return 0.5 * np.pi * np.cos(0.5 * np.pi * t) * x


def _trig_sigma(t: float, x: np.ndarray) -> np.ndarray:
    return np.full(x.shape[0], np.cos(0.5 * np.pi * t))


def _trig_sigma_dot(t: float, x: np.ndarray) -> np.ndarray:
    return np.full(x.shape[0], -0.5 * np.pi * np.sin(0.5 * np.pi * t))


def check_boundary_conditions(
    schedule: AffineSchedule,
    probes: np.ndarray,
    sigma_min: float = 0.0,
    interior_grid: int = 64,
) -> None:
    """Raise ScheduleError unless m(0)=0, m(1)=x, sigma(0)=1, sigma(1)=sigma_min and sigma>0 on [0, 1)."""
    probes = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    scale = 1.0 + float(np.max(np.abs(probes)))
    if np.max(np.abs(schedule.m(0.0, probes))) > BOUNDARY_TOL * scale:
        raise ScheduleError(f"{schedule.name}: m(0, x) != 0")
    if np.max(np.abs(schedule.m(1.0, probes) - probes)) > BOUNDARY_TOL * scale:
        raise ScheduleError(f"{schedule.name}: m(1, x) != x")
    if np.max(np.abs(schedule.sigma(0.0, probes) - 1.0)) > BOUNDARY_TOL:
        raise ScheduleError(f"{schedule.name}: sigma(0, x) != 1")
    if np.max(np.abs(schedule.sigma(1.0, probes) - sigma_min)) > BOUNDARY_TOL:
        raise ScheduleError(f"{schedule.name}: sigma(1, x) != {sigma_min}")
    for t in np.linspace(0.0, 1.0, interior_grid, endpoint=False):
        if np.min(schedule.sigma(float(t), probes)) <= 0.0:
            raise ScheduleError(f"{schedule.name}: sigma(t, x) <= 0 at t={t:.6g}")


def _probe_points(count: int = 100, dim: int = 3, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((count, dim)) * 5.0


def rectified_flow() -> AffineSchedule:
    return regularized_rectified_flow(0.0, name="rf")


def regularized_rectified_flow(sigma_min: float, name: str | None = None) -> AffineSchedule:
    if not 0.0 <= sigma_min < 1.0:
        raise DomainError(f"sigma_min must lie in [0, 1), got {sigma_min}")
    schedule = AffineSchedule(
        m=_linear_mean,
        m_dot=_linear_mean_dot,
        sigma=partial(_linear_sigma, sigma_min=sigma_min),
        sigma_dot=partial(_linear_sigma_dot, sigma_min=sigma_min),
        name=name or f"rf_regularized({sigma_min:g})",
    )
    check_boundary_conditions(schedule, _probe_points(), sigma_min=sigma_min)
    return schedule


def trigonometric_flow() -> AffineSchedule:
    schedule = AffineSchedule(
        m=_trig_mean,
        m_dot=_trig_mean_dot,
        sigma=_trig_sigma,
        sigma_dot=_trig_sigma_dot,
        name="trig",
    )
    check_boundary_conditions(schedule, _probe_points(), sigma_min=0.0)
    return schedule


def load_custom_schedule(factory: str) -> AffineSchedule:
    """Resolve ``package.module:function`` and call it to build a schedule."""
    module_name, sep, attr = factory.partition(":")
    if not sep or not module_name or not attr:
        raise ValueError(f"custom schedule factory must look like 'module:function', got {factory!r}")
    module = importlib.import_module(module_name)
    schedule = getattr(module, attr)()
    if not isinstance(schedule, AffineSchedule):
        raise TypeError(f"{factory} returned {type(schedule).__name__}, expected AffineSchedule")
    logger.info("Loaded custom schedule %s from %s", schedule.name, factory)
    return schedule


def _single_row(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    return np.atleast_2d(x), x.ndim == 1


def affine_coefficients(schedule: AffineSchedule, t: float, x: np.ndarray) -> tuple[np.ndarray | float, np.ndarray]:
    """Return (a, b) so that the conditional velocity is v(t, z | x) = a z + b.

    ``x`` may be a single point of shape (d,) or rows of shape (N, d); ``a``
    then has shape () or (N,) and ``b`` matches ``x``.
    """
    rows, single = _single_row(x)
    m, m_dot, sigma, sigma_dot = schedule.evaluate(t, rows)
    if np.any(sigma <= 0.0):
        raise DomainError(f"sigma_t(x) <= 0 at t={t}")
    a = sigma_dot / sigma
    b = m_dot - m * a[:, None]
    if single:
        return float(a[0]), b[0]
    return a, b


def conditional_log_density(
    schedule: AffineSchedule,
    kernel: SourceKernel,
    t: float,
    z: np.ndarray,
    x: np.ndarray,
) -> np.ndarray | float:
    """log p_t(z | x) = -d log sigma_t(x) + log K((z - m_t(x)) / sigma_t(x)).

    ``z`` may carry leading batch axes; ``x`` is a single point.
    """
    rows, _ = _single_row(x)
    if rows.shape[0] != 1:
        raise ValueError("conditional_log_density takes a single conditioning point")
    m, _, sigma, _ = schedule.evaluate(t, rows)
    if sigma[0] <= 0.0:
        raise DomainError(f"sigma_t(x) <= 0 at t={t}")
    z = np.asarray(z, dtype=np.float64)
    u = (z - m[0]) / sigma[0]
    out = kernel.log_density(u) - kernel.dim * np.log(sigma[0])
    return float(out) if np.ndim(out) == 0 else out
