from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from fmkinetics.config import T_MAX
from fmkinetics.core.errors import DomainError, NumericalError
from fmkinetics.core.models import GaussianParams
from fmkinetics.fields.base import VelocityField

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class PopulationGaussianField(VelocityField):
    """Rectified-flow velocity between N(0, I) and N(m1, S1) under the independent coupling.

    Along Z_t = (1 - t) X0 + t X1 the path law is N(t m1, S_t) with
    S_t = (1 - t)^2 I + t^2 S1, and the optimal velocity is linear in z:
    v(t, z) = m1 + (t S1 - (1 - t) I) S_t^-1 (z - t m1).
    """

    target: GaussianParams
    t_max: float = T_MAX

    def __post_init__(self) -> None:
        if not 0.0 < self.t_max < 1.0:
            raise DomainError(f"t_max must lie in (0, 1), got {self.t_max}")

    @property
    def dim(self) -> int:
        return self.target.dim

    def _path_eigenvalues(self, t: float) -> np.ndarray:
        lam = self.target.eigenvalues
        s = (1.0 - t) ** 2 + t * t * lam
        if np.any(s <= 0.0):
            raise NumericalError(f"path covariance is singular at t={t}")
        return s

    def path_covariance(self, t: float) -> np.ndarray:
        return self.target.spectral(lambda _: self._path_eigenvalues(t))

    def jacobian(self, t: float) -> np.ndarray:
        """Analytic Jacobian (t S1 - (1 - t) I) S_t^-1, symmetric since both factors are functions of S1."""
        s = self._path_eigenvalues(t)
        return self.target.spectral(lambda lam: (t * lam - (1.0 - t)) / s)

    def velocity(self, t: float, z: np.ndarray) -> np.ndarray:
        self.check_time(t)
        z = np.asarray(z, dtype=np.float64)
        m1 = self.target.mean
        # broadcast-reduce keeps each row independent of the batch it is evaluated in
        return m1 + np.sum((z - t * m1)[..., :, None] * self.jacobian(t), axis=-2)

    def analytic_score(self, t: float, z: np.ndarray) -> np.ndarray:
        """Gaussian score -S_t^-1 (z - t m1)."""
        z = np.asarray(z, dtype=np.float64)
        s = self._path_eigenvalues(t)
        inv = self.target.spectral(lambda _: 1.0 / s)
        return -(z - t * self.target.mean) @ inv

    def score(self, t: float, z: np.ndarray) -> np.ndarray:
        if not 0.0 < t < 1.0:
            raise DomainError(f"score relation needs t in (0, 1), got t={t!r}")
        z = np.asarray(z, dtype=np.float64)
        return (t / (1.0 - t)) * self.velocity(t, z) - z / (1.0 - t)

    def flow_map(self, t: float, x: np.ndarray) -> np.ndarray:
        """Exact ODE solution from x at time 0: t m1 + S_t^{1/2} x."""
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t={t!r} outside [0, 1]")
        x = np.asarray(x, dtype=np.float64)
        s = self._path_eigenvalues(t)
        root = self.target.spectral(lambda _: np.sqrt(s))
        return t * self.target.mean + x @ root


def population_gaussian_velocity(field: PopulationGaussianField, t: float, z: np.ndarray) -> np.ndarray:
    return field.velocity(t, z)


def population_score(field: PopulationGaussianField, t: float, z: np.ndarray) -> np.ndarray:
    return field.score(t, z)
