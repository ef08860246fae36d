from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from fmkinetics.config import SYMMETRY_TOL
from fmkinetics.core.errors import DatasetValidationError, DomainError, NumericalError

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, order="C", copy=True)
    array.setflags(write=False)
    return array


class KernelKind(str, Enum):
    STANDARD_GAUSSIAN = "standard_gaussian"
    STUDENT_T = "student_t"


@dataclass(frozen=True, slots=True, eq=False)
class Dataset:
    """Fixed sample set stored as a dense (N, d) row-major array."""

    points: np.ndarray
    dim: int = field(init=False)
    max_norm: float = field(init=False)

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim == 1 and points.size:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise DatasetValidationError(f"dataset must be a non-empty (N, d) array, got shape {points.shape}")
        if not np.all(np.isfinite(points)):
            bad = int(np.argwhere(~np.isfinite(points))[0, 0])
            raise DatasetValidationError(f"dataset row {bad} has non-finite coordinates")
        points = _frozen(points)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "dim", int(points.shape[1]))
        object.__setattr__(self, "max_norm", float(np.max(np.linalg.norm(points, axis=1))))

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]] | np.ndarray) -> "Dataset":
        rows = [np.atleast_1d(np.asarray(row, dtype=np.float64)) for row in points]
        if not rows:
            raise DatasetValidationError("dataset must contain at least one point")
        widths = {row.shape for row in rows}
        if len(widths) != 1:
            raise DatasetValidationError(f"dataset rows have inconsistent dimensions: {sorted(w[0] for w in widths)}")
        return cls(np.vstack(rows))

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True, slots=True)
class SourceKernel:
    """Strictly positive source density K on R^d."""

    kind: KernelKind
    dim: int
    dof: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.dim < 1:
            raise DomainError(f"kernel dimension must be positive, got {self.dim}")
        if self.kind is KernelKind.STANDARD_GAUSSIAN and self.dof is not None:
            raise DomainError("standard_gaussian kernel takes no dof parameter")
        if self.kind is KernelKind.STUDENT_T:
            if self.dof is None or not np.isfinite(self.dof) or self.dof <= 0:
                raise DomainError(f"student_t kernel requires dof > 0, got {self.dof}")
            object.__setattr__(self, "dof", float(self.dof))

    @classmethod
    def gaussian(cls, dim: int) -> "SourceKernel":
        return cls(KernelKind.STANDARD_GAUSSIAN, dim)

    @classmethod
    def student_t(cls, dim: int, dof: float) -> "SourceKernel":
        return cls(KernelKind.STUDENT_T, dim, dof)

    @property
    def tail_index(self) -> float | None:
        # P(||X|| >= s) ~ s^-nu for the spherical construction
        return self.dof if self.kind is KernelKind.STUDENT_T else None

    def log_density(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        sq = np.sum(u * u, axis=-1)
        d = self.dim
        if self.kind is KernelKind.STANDARD_GAUSSIAN:
            return -0.5 * sq - 0.5 * d * np.log(2.0 * np.pi)
        nu = self.dof
        log_norm = gammaln(0.5 * (nu + d)) - gammaln(0.5 * nu) - 0.5 * d * np.log(nu * np.pi)
        return log_norm - 0.5 * (nu + d) * np.log1p(sq / nu)

    def grad_log_density(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.kind is KernelKind.STANDARD_GAUSSIAN:
            return -u
        nu = self.dof
        sq = np.sum(u * u, axis=-1, keepdims=True)
        return -(nu + self.dim) * u / (nu + sq)


@dataclass(frozen=True, slots=True, eq=False)
class GaussianParams:
    """Target N(mean, covariance) with its symmetric eigendecomposition."""

    mean: np.ndarray
    covariance: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if mean.ndim != 1:
            raise DatasetValidationError(f"mean must be a vector, got shape {mean.shape}")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise DatasetValidationError(f"covariance must have shape ({d}, {d}), got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise DatasetValidationError("gaussian parameters must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise NumericalError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        if eigenvalues[0] <= 0.0:
            raise NumericalError(f"covariance is not positive definite (min eigenvalue {eigenvalues[0]:.3e})")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "covariance", _frozen(cov))
        object.__setattr__(self, "eigenvalues", _frozen(eigenvalues))
        object.__setattr__(self, "eigenvectors", _frozen(eigenvectors))

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def is_identity(self, tol: float = 1e-12) -> bool:
        return bool(
            np.max(np.abs(self.covariance - np.eye(self.dim))) <= tol
        )

    def spectral(self, fn) -> np.ndarray:
        """Return U diag(fn(lambda)) U^T."""
        vecs = self.eigenvectors
        return (vecs * fn(self.eigenvalues)) @ vecs.T
