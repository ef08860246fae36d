from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

import numpy as np
import pandas as pd
from scipy import stats

from fmkinetics.config import (
    DKW_DELTA,
    MIN_SURVIVAL_COUNT,
    MIN_SURVIVAL_SAMPLES,
    MIN_TAIL_POINTS,
    MIN_TAIL_SAMPLES,
    TAIL_QUANTILE,
)
from fmkinetics.core.errors import DomainError, InsufficientDataError, TailFitError

logger = logging.getLogger(__name__)


class TailModel(str, Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True, slots=True, eq=False)
class SurvivalCurve:
    """Empirical S(u) = fraction of samples >= u at every distinct sample value."""

    thresholds: np.ndarray
    survival: np.ndarray
    n: int

    def __len__(self) -> int:
        return int(self.thresholds.shape[0])

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.thresholds.tolist(), self.survival.tolist()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"u": self.thresholds, "survival": self.survival})

    def at(self, u: np.ndarray | float) -> np.ndarray:
        """Step-function evaluation: fraction of samples >= u."""
        idx = np.searchsorted(self.thresholds, u, side="left")
        padded = np.append(self.survival, 0.0)
        return padded[idx]


@dataclass(frozen=True, slots=True)
class TailFitResult:
    model: TailModel
    slope: float
    intercept: float
    r_squared: float
    n_tail: int
    threshold_quantile: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.value,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_tail": self.n_tail,
            "threshold_quantile": self.threshold_quantile,
        }


def survival_function(samples: np.ndarray) -> SurvivalCurve:
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < MIN_SURVIVAL_SAMPLES:
        raise InsufficientDataError(
            f"survival estimate needs at least {MIN_SURVIVAL_SAMPLES} samples, got {samples.size}"
        )
    if not np.all(np.isfinite(samples)):
        raise DomainError("survival samples must be finite")
    ordered = np.sort(samples)
    thresholds, first = np.unique(ordered, return_index=True)
    n = ordered.size
    return SurvivalCurve(thresholds=thresholds, survival=(n - first) / n, n=n)


def dkw_radius(n: int, delta: float = DKW_DELTA) -> float:
    """One-sided Dvoretzky-Kiefer-Wolfowitz radius sqrt(log(1/delta) / 2n)."""
    if n < 1 or not 0.0 < delta < 1.0:
        raise DomainError(f"invalid DKW arguments n={n}, delta={delta}")
    return float(np.sqrt(np.log(1.0 / delta) / (2.0 * n)))


def _tail_region(sf: SurvivalCurve, q: float) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < q < 1.0:
        raise DomainError(f"tail quantile must lie in (0, 1), got {q}")
    if len(sf) <= 2:
        raise TailFitError(f"degenerate sample: only {len(sf)} distinct values")
    upper = max(1.0 - q, MIN_TAIL_SAMPLES / sf.n)
    lower = MIN_SURVIVAL_COUNT / sf.n
    mask = (sf.survival <= upper) & (sf.survival >= lower)
    u, s = sf.thresholds[mask], sf.survival[mask]
    if u.size < MIN_TAIL_POINTS:
        raise TailFitError(f"tail region has {u.size} distinct thresholds, need {MIN_TAIL_POINTS}")
    dropped = int(np.count_nonzero(sf.survival < lower))
    if dropped:
        logger.debug("Dropped %d extreme thresholds with S(u) < %d/n", dropped, MIN_SURVIVAL_COUNT)
    return u, s


def _fit(model: TailModel, x: np.ndarray, y: np.ndarray, q: float) -> TailFitResult:
    if np.ptp(x) == 0.0:
        raise TailFitError("tail thresholds are constant")
    fit = stats.linregress(x, y)
    if not fit.slope < 0.0:
        raise TailFitError(f"{model.value} fit has non-negative slope {fit.slope:.6g}")
    return TailFitResult(
        model=model,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(min(1.0, fit.rvalue**2)),
        n_tail=int(x.size),
        threshold_quantile=q,
    )


def fit_exponential_tail(sf: SurvivalCurve, q: float = TAIL_QUANTILE) -> TailFitResult:
    """Least-squares line through (u, log S(u)) on the tail region."""
    u, s = _tail_region(sf, q)
    return _fit(TailModel.EXPONENTIAL, u, np.log(s), q)


def fit_polynomial_tail(sf: SurvivalCurve, q: float = TAIL_QUANTILE) -> TailFitResult:
    """Least-squares line through (log u, log S(u)) on the tail region; slope estimates -gamma."""
    u, s = _tail_region(sf, q)
    if np.any(u <= 0.0):
        raise TailFitError("polynomial fit needs strictly positive thresholds")
    return _fit(TailModel.POLYNOMIAL, np.log(u), np.log(s), q)


def compare_tail_models(sf: SurvivalCurve, q: float = TAIL_QUANTILE) -> tuple[TailModel, TailFitResult, TailFitResult]:
    exp_fit = fit_exponential_tail(sf, q)
    poly_fit = fit_polynomial_tail(sf, q)
    winner = TailModel.EXPONENTIAL if exp_fit.r_squared >= poly_fit.r_squared else TailModel.POLYNOMIAL
    logger.info(
        "Tail fits: exponential r2=%.4f slope=%.4g, polynomial r2=%.4f slope=%.4g -> %s",
        exp_fit.r_squared, exp_fit.slope, poly_fit.r_squared, poly_fit.slope, winner.value,
    )
    return winner, exp_fit, poly_fit


def bound_domination_check(
    sf: SurvivalCurve,
    bound: Callable[[np.ndarray], np.ndarray | float],
    u_min: float,
    delta: float = DKW_DELTA,
) -> bool:
    """True iff S(u) <= bound(u) + DKW radius at every threshold u >= u_min."""
    if not sf.thresholds[0] <= u_min <= sf.thresholds[-1]:
        raise DomainError(f"u_min={u_min} outside the sampled range [{sf.thresholds[0]}, {sf.thresholds[-1]}]")
    mask = sf.thresholds >= u_min
    u = sf.thresholds[mask]
    limit = np.broadcast_to(np.asarray(bound(u), dtype=np.float64), u.shape)
    slack = dkw_radius(sf.n, delta)
    violations = sf.survival[mask] > limit + slack
    if np.any(violations):
        first = int(np.flatnonzero(violations)[0])
        logger.info(
            "Bound violated at u=%.6g: S=%.6g > %.6g + %.3g",
            u[first], sf.survival[mask][first], limit[first], slack,
        )
        return False
    return True


def exponent_window_check(fit: TailFitResult, gamma: float, window: float = 0.5) -> bool:
    """True iff a polynomial fit's slope lies within ``window`` of -gamma."""
    if fit.model is not TailModel.POLYNOMIAL:
        raise ValueError("exponent window applies to polynomial fits only")
    return abs(fit.slope + gamma) <= window
