from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np

from fmkinetics.config import T_MAX
from fmkinetics.core.errors import DomainError


class VelocityField(ABC):
    """Time-dependent velocity v(t, z) evaluated on arrays of shape (..., d)."""

    t_max: float

    @property
    @abstractmethod
    def dim(self) -> int:
        raise NotImplementedError

    @abstractmethod
    def velocity(self, t: float, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check_time(self, t: float) -> None:
        if not 0.0 <= t <= self.t_max:
            raise DomainError(f"t={t!r} outside [0, {self.t_max}]")

    def __call__(self, t: float, z: np.ndarray) -> np.ndarray:
        return self.velocity(t, z)


@dataclass(frozen=True, slots=True)
class CallableField(VelocityField):
    """Adapts a plain function ``fn(t, z) -> v`` (batched over leading axes)."""

    fn: Callable[[float, np.ndarray], np.ndarray]
    dimension: int
    t_max: float = T_MAX

    @property
    def dim(self) -> int:
        return self.dimension

    def velocity(self, t: float, z: np.ndarray) -> np.ndarray:
        self.check_time(t)
        return np.asarray(self.fn(t, np.asarray(z, dtype=np.float64)), dtype=np.float64)
