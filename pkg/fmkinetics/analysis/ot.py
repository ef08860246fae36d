"""Closed-form Gaussian transport baselines and concentration constants.

With source N(0, I) and target N(m1, S1) the Monge map T(x) = m1 + S1^{1/2} x
coincides with the rectified-flow endpoint map, and the transport energy of a
target point y is E(y) = ||y - T^{-1}(y)||^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from fmkinetics.config import EIGEN_CLAMP, EIGEN_REJECT, MGF_PROPOSAL_SCALE
from fmkinetics.core.errors import DomainError, NumericalError
from fmkinetics.core.models import Dataset, GaussianParams
from fmkinetics.core.schedules import AffineSchedule, affine_coefficients

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class GaussianTransport:
    target: GaussianParams
    sqrt_cov: np.ndarray = field(init=False, repr=False)
    inv_sqrt_cov: np.ndarray = field(init=False, repr=False)
    rho: float = field(init=False)
    tail_C: float | None = field(init=False)

    def __post_init__(self) -> None:
        lam = self.target.eigenvalues
        if lam[0] < EIGEN_REJECT:
            raise NumericalError(f"covariance eigenvalue {lam[0]:.3e} below {EIGEN_REJECT:g}")
        lam = np.maximum(lam, EIGEN_CLAMP)
        root = np.sqrt(lam)
        object.__setattr__(self, "sqrt_cov", self.target.spectral(lambda _: root))
        object.__setattr__(self, "inv_sqrt_cov", self.target.spectral(lambda _: 1.0 / root))
        rho = 0.0 if self.target.is_identity() else float(np.max((root - 1.0) ** 2))
        object.__setattr__(self, "rho", rho)
        tail_c = None
        if rho > 0.0:
            m1 = self.target.mean
            tail_c = float(2.0 ** (0.5 * self.dim) * np.exp(float(m1 @ m1) / (2.0 * rho)))
        object.__setattr__(self, "tail_C", tail_c)

    @property
    def dim(self) -> int:
        return self.target.dim

    def pushforward(self, x: np.ndarray) -> np.ndarray:
        return self.target.mean + np.asarray(x, dtype=np.float64) @ self.sqrt_cov

    def log_density(self, y: np.ndarray) -> np.ndarray | float:
        """log p1(y) for the target Gaussian."""
        return stats.multivariate_normal(self.target.mean, self.target.covariance).logpdf(y)


def monge_map(gt: GaussianTransport, x: np.ndarray) -> np.ndarray:
    return gt.pushforward(x)


def inverse_map(gt: GaussianTransport, y: np.ndarray) -> np.ndarray:
    return (np.asarray(y, dtype=np.float64) - gt.target.mean) @ gt.inv_sqrt_cov


def ot_energy(gt: GaussianTransport, y: np.ndarray) -> np.ndarray | float:
    y = np.asarray(y, dtype=np.float64)
    diff = y - inverse_map(gt, y)
    out = np.sum(diff * diff, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def energy_identity_residual(gt: GaussianTransport, y: np.ndarray) -> np.ndarray | float:
    """Residual of E(y)/2 = -log p1(y) + C(y); zero up to rounding."""
    y = np.asarray(y, dtype=np.float64)
    m1, inv_root = gt.target.mean, gt.inv_sqrt_cov
    d = gt.dim
    log_det = float(np.sum(np.log(gt.target.eigenvalues))) + d * np.log(2.0 * np.pi)
    quad = np.sum(y * y, axis=-1) - 2.0 * np.sum((y @ inv_root) * y, axis=-1)
    c_y = 0.5 * quad + (y @ inv_root) @ m1 - 0.5 * log_det
    out = 0.5 * ot_energy(gt, y) + gt.log_density(y) - c_y
    return float(out) if np.ndim(out) == 0 else out


def exp_tail_bound(gt: GaussianTransport, u: np.ndarray | float) -> np.ndarray | float:
    """min(1, C exp(-u / (4 rho))), an upper bound on P(E(Y) >= u)."""
    if gt.rho <= 0.0 or gt.tail_C is None:
        raise DomainError("exp_tail_bound requires a target covariance different from the identity")
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0):
        raise DomainError("energy threshold u must be positive")
    out = np.minimum(1.0, gt.tail_C * np.exp(-u / (4.0 * gt.rho)))
    return float(out) if out.ndim == 0 else out


def w2_squared_gaussian(gt: GaussianTransport) -> float:
    """E||X - T(X)||^2 for X ~ N(0, I): ||m1||^2 + tr S1 + d - 2 tr S1^{1/2}."""
    m1 = gt.target.mean
    return float(m1 @ m1 + np.trace(gt.target.covariance) + gt.dim - 2.0 * np.trace(gt.sqrt_cov))


def monte_carlo_w2_squared(gt: GaussianTransport, count: int, seed: int) -> float:
    x = np.random.default_rng(seed).standard_normal((count, gt.dim))
    diff = x - gt.pushforward(x)
    return float(np.mean(np.sum(diff * diff, axis=1)))


# -- rectified-flow energetics with a Gaussian source --------------------------------


def rf_energy_factor(T: float) -> float:
    """c3(T) = (2/3)((1 - T)^-3 - 1), the integral of 2 / (1 - t)^4 over [0, T]."""
    if not 0.0 <= T < 1.0:
        raise DomainError(f"horizon T={T!r} outside [0, 1)")
    return (2.0 / 3.0) * ((1.0 - T) ** -3 - 1.0)


@dataclass(frozen=True, slots=True)
class Thm1Constants:
    """Exponential-tail constants for K_t (at time t) and E_T (over [0, T])."""

    c_t: float
    C_t: float
    U_t: float
    c_T: float
    C_T: float
    U_T: float
    c3: float


def thm1_constants(dataset: Dataset, t: float, T: float) -> Thm1Constants:
    if T >= 1.0:
        raise DomainError(f"horizon T={T!r} must be below 1")
    if not 0.0 <= t <= T:
        raise DomainError(f"need 0 <= t <= T, got t={t!r}, T={T!r}")
    m_sq = dataset.max_norm**2
    d = dataset.dim
    c3 = rf_energy_factor(T)
    C = float(np.exp(m_sq / 16.0))
    return Thm1Constants(
        c_t=(1.0 - t) ** 4 / 32.0,
        C_t=C,
        U_t=2.0 * (1.0 - t) ** -4 * (2.0 * d + m_sq),
        c_T=3.0 / (32.0 * ((1.0 - T) ** -3 - 1.0)) if T > 0.0 else float("inf"),
        C_T=C,
        U_T=c3 * (2.0 * d + m_sq),
        c3=c3,
    )


def _thresholded_exp_bound(C: float, rate: float, threshold: float) -> Callable[[np.ndarray], np.ndarray]:
    def bound(u):
        u = np.asarray(u, dtype=np.float64)
        out = np.where(u >= threshold, np.minimum(1.0, C * np.exp(-rate * u)), 1.0)
        return float(out) if out.ndim == 0 else out

    return bound


def thm1_tail_bounds(dataset: Dataset, t: float, T: float) -> tuple[Callable, Callable]:
    """Bounds u -> P(K_t >= u) and u -> P(E_T >= u); both equal 1 below their validity thresholds."""
    k = thm1_constants(dataset, t, T)
    return (
        _thresholded_exp_bound(k.C_t, k.c_t, k.U_t),
        _thresholded_exp_bound(k.C_T, k.c_T, k.U_T),
    )


# -- scalar Gaussian and chi-square bounds -------------------------------------------


def gaussian_mgf(a: float, b: float) -> float:
    """E exp(a W + b W^2) for W ~ N(0, 1)."""
    if b >= 0.5:
        raise DomainError(f"b={b!r} must be below 1/2 for the expectation to be finite")
    return float((1.0 - 2.0 * b) ** -0.5 * np.exp(a * a / (2.0 * (1.0 - 2.0 * b))))


def monte_carlo_mgf(
    a: float, b: float, count: int, seed: int, proposal_scale: float = MGF_PROPOSAL_SCALE
) -> tuple[float, float]:
    """Importance-sampled mean and standard error of E exp(a W + b W^2), W ~ N(0, 1).

    Draws come from N(0, s^2) with s = ``proposal_scale``. With s = 1 this is the
    plain sample mean, whose variance is infinite once b >= 1/4.
    """
    if b >= 0.5:
        raise DomainError(f"b={b!r} must be below 1/2")
    if proposal_scale <= 0.0:
        raise DomainError(f"proposal_scale must be positive, got {proposal_scale}")
    w = proposal_scale * np.random.default_rng(seed).standard_normal(count)
    log_ratio = 0.5 * w * w * (1.0 / proposal_scale**2 - 1.0) + np.log(proposal_scale)
    values = np.exp(a * w + b * w * w + log_ratio)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(count))


def chisq_tail_bound(s: float, d: int) -> float:
    """exp(-s d / 16) >= P(||X||^2 / d >= s) for X ~ N(0, I_d), valid for s >= 2."""
    if s < 2.0:
        raise DomainError(f"s={s!r} below the validity range s >= 2")
    if d < 1:
        raise DomainError(f"dimension must be positive, got {d}")
    return float(np.exp(-s * d / 16.0))


def chisq_chernoff_bound(s: float, d: int) -> float:
    """exp(-(d/2)(s - 1 - ln s)), the Chernoff bound behind the s >= 2 relaxation."""
    if s < 1.0:
        raise DomainError(f"s={s!r} below the validity range s >= 1")
    if d < 1:
        raise DomainError(f"dimension must be positive, got {d}")
    return float(np.exp(-0.5 * d * (s - 1.0 - np.log(s))))


def chisq_exceedance(s: float, d: int) -> float:
    """Exact P(||X||^2 / d >= s)."""
    return float(stats.chi2.sf(s * d, d))


def monte_carlo_chisq_exceedance(s: float, d: int, count: int, seed: int) -> float:
    x = np.random.default_rng(seed).standard_normal((count, d))
    return float(np.mean(np.sum(x * x, axis=1) / d >= s))


# -- affine-growth (Gronwall) constants -------------------------------------------------


@dataclass(frozen=True, slots=True)
class AffineGrowthConstants:
    """||v(t, z)|| <= a_max ||z|| + b_max on [0, horizon] and the energy constants it implies."""

    horizon: float
    a_max: float
    b_max: float
    c1: float
    c2: float
    c3: float
    c4: float
    kinetic_constant: float
    energy_constant: float


def affine_growth_constants(
    dataset: Dataset,
    schedule: AffineSchedule,
    T: float,
    grid: int = 1025,
) -> AffineGrowthConstants:
    if not 0.0 < T < 1.0:
        raise DomainError(f"horizon T={T!r} outside (0, 1)")
    if grid < 2:
        raise DomainError(f"grid must contain at least two nodes, got {grid}")
    a_max = 0.0
    b_max = 0.0
    for t in np.linspace(0.0, T, grid):
        a, b = affine_coefficients(schedule, float(t), dataset.points)
        a_max = max(a_max, float(np.max(np.abs(a))))
        b_max = max(b_max, float(np.max(np.linalg.norm(b, axis=1))))
    c1 = float(np.exp(a_max * T))
    c2 = b_max * T * c1
    c3 = a_max * c1
    c4 = a_max * c2 + b_max
    c_k = 2.0 * max(c3 * c3, c4 * c4)
    logger.debug("Affine growth on [0, %g]: A=%.6g B=%.6g C_K=%.6g", T, a_max, b_max, c_k)
    return AffineGrowthConstants(
        horizon=T,
        a_max=a_max,
        b_max=b_max,
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        kinetic_constant=c_k,
        energy_constant=T * c_k,
    )
