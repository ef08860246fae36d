"""Closed-form minimizer of the empirical flow-matching objective.

For a dataset {x_i} and an affine schedule, the minimizing velocity is the
posterior-weighted average of the conditional velocities

    v(t, z) = sum_i w_i(t, z) (a_t(x_i) z + b_t(x_i)),
    w_i(t, z) = p_t(z | x_i) / sum_j p_t(z | x_j).

Every mixture quantity is evaluated in log space with max subtraction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from fmkinetics.config import T_MAX, WEIGHT_FLUSH
from fmkinetics.core.errors import DomainError
from fmkinetics.core.models import Dataset, KernelKind, SourceKernel
from fmkinetics.core.schedules import AffineSchedule, rectified_flow
from fmkinetics.fields.base import VelocityField

logger = logging.getLogger(__name__)


def _flatten(z: np.ndarray, dim: int) -> tuple[np.ndarray, tuple[int, ...]]:
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1:] != (dim,):
        raise ValueError(f"expected trailing dimension {dim}, got shape {z.shape}")
    return z.reshape(-1, dim), z.shape[:-1]


@dataclass(frozen=True, slots=True, eq=False)
class _Components:
    m: np.ndarray          # (N, d)
    sigma: np.ndarray      # (N,)
    a: np.ndarray          # (N,)
    b: np.ndarray          # (N, d)


@dataclass(frozen=True, slots=True, eq=False)
class EmpiricalField(VelocityField):
    dataset: Dataset
    schedule: AffineSchedule
    kernel: SourceKernel
    t_max: float = T_MAX

    def __post_init__(self) -> None:
        if self.kernel.dim != self.dataset.dim:
            raise ValueError(f"kernel dimension {self.kernel.dim} != dataset dimension {self.dataset.dim}")
        if not 0.0 < self.t_max < 1.0:
            raise DomainError(f"t_max must lie in (0, 1), got {self.t_max}")

    @property
    def dim(self) -> int:
        return self.dataset.dim

    def _components(self, t: float) -> _Components:
        self.check_time(t)
        m, m_dot, sigma, sigma_dot = self.schedule.evaluate(t, self.dataset.points)
        if np.any(sigma <= 0.0):
            raise DomainError(f"sigma_t(x) <= 0 at t={t}")
        a = sigma_dot / sigma
        return _Components(m=m, sigma=sigma, a=a, b=m_dot - m * a[:, None])

    def _log_conditionals(self, comp: _Components, flat: np.ndarray) -> np.ndarray:
        # (B, N) matrix of log p_t(z_b | x_i)
        u = (flat[:, None, :] - comp.m[None, :, :]) / comp.sigma[None, :, None]
        return self.kernel.log_density(u) - self.dim * np.log(comp.sigma)[None, :]

    def _weights(self, comp: _Components, flat: np.ndarray) -> np.ndarray:
        log_c = self._log_conditionals(comp, flat)
        w = np.exp(log_c - logsumexp(log_c, axis=1, keepdims=True))
        w[w < WEIGHT_FLUSH] = 0.0
        return w

    def log_weights(self, t: float, z: np.ndarray) -> np.ndarray:
        flat, lead = _flatten(z, self.dim)
        log_c = self._log_conditionals(self._components(t), flat)
        return (log_c - logsumexp(log_c, axis=1, keepdims=True)).reshape(*lead, -1)

    def weights(self, t: float, z: np.ndarray) -> np.ndarray:
        flat, lead = _flatten(z, self.dim)
        return self._weights(self._components(t), flat).reshape(*lead, -1)

    def velocity(self, t: float, z: np.ndarray) -> np.ndarray:
        flat, lead = _flatten(z, self.dim)
        comp = self._components(t)
        w = self._weights(comp, flat)
        # sum_i w_i (a_i z + b_i) = (w . a) z + w . b, reduced without BLAS so rows do not depend on batch size
        v = np.sum(w * comp.a, axis=1)[:, None] * flat + np.sum(w[:, :, None] * comp.b[None, :, :], axis=1)
        return v.reshape(*lead, self.dim)

    def log_density(self, t: float, z: np.ndarray) -> np.ndarray | float:
        flat, lead = _flatten(z, self.dim)
        log_c = self._log_conditionals(self._components(t), flat)
        out = (logsumexp(log_c, axis=1) - np.log(self.dataset.size)).reshape(lead)
        return float(out) if out.ndim == 0 else out

    def conditional_velocities(self, t: float, z: np.ndarray) -> np.ndarray:
        """Per-point conditional velocities v_i = a_i z + b_i, shape (..., N, d)."""
        flat, lead = _flatten(z, self.dim)
        comp = self._components(t)
        v = comp.a[None, :, None] * flat[:, None, :] + comp.b[None, :, :]
        return v.reshape(*lead, self.dataset.size, self.dim)

    def weight_gradients(self, t: float, z: np.ndarray, h: float | None = None) -> np.ndarray:
        """Spatial gradients of the weights, shape (..., N, d).

        With ``h=None`` the analytic form w_i (g_i - sum_j w_j g_j) is used, where
        g_i = grad log K(u_i) / sigma_i. Otherwise central differences with step ``h``.
        """
        flat, lead = _flatten(z, self.dim)
        comp = self._components(t)
        n, d = self.dataset.size, self.dim
        if h is None:
            w = self._weights(comp, flat)
            u = (flat[:, None, :] - comp.m[None, :, :]) / comp.sigma[None, :, None]
            g = self.kernel.grad_log_density(u) / comp.sigma[None, :, None]
            mean_g = np.einsum("bn,bnd->bd", w, g)
            grads = w[:, :, None] * (g - mean_g[:, None, :])
        else:
            if h <= 0.0:
                raise DomainError(f"finite-difference step must be positive, got {h}")
            grads = np.empty((flat.shape[0], n, d))
            for k in range(d):
                step = np.zeros(d)
                step[k] = h
                grads[:, :, k] = (self._weights(comp, flat + step) - self._weights(comp, flat - step)) / (2.0 * h)
        return grads.reshape(*lead, n, d)


def weights(field: EmpiricalField, t: float, z: np.ndarray) -> np.ndarray:
    return field.weights(t, z)


def empirical_velocity(field: EmpiricalField, t: float, z: np.ndarray) -> np.ndarray:
    return field.velocity(t, z)


def empirical_log_density(field: EmpiricalField, t: float, z: np.ndarray) -> np.ndarray | float:
    return field.log_density(t, z)


def rf_softmax_velocity(dataset: Dataset, t: float, z: np.ndarray) -> np.ndarray:
    """Rectified-flow minimizer with a Gaussian source in its specialised softmax form."""
    if not 0.0 <= t < 1.0:
        raise DomainError(f"t={t!r} outside [0, 1)")
    flat, lead = _flatten(z, dataset.dim)
    x = dataset.points
    diff = flat[:, None, :] - t * x[None, :, :]
    logits = -np.sum(diff * diff, axis=-1) / (2.0 * (1.0 - t) ** 2)
    w = softmax(logits, axis=1)
    v = np.einsum("bn,bnd->bd", w, x[None, :, :] - flat[:, None, :]) / (1.0 - t)
    return v.reshape(*lead, dataset.dim)


def rectified_gaussian_field(dataset: Dataset, t_max: float = T_MAX) -> EmpiricalField:
    return EmpiricalField(dataset, rectified_flow(), SourceKernel(KernelKind.STANDARD_GAUSSIAN, dataset.dim), t_max)
