import numpy as np
import pytest

from fmkinetics.analysis.ot import GaussianTransport, exp_tail_bound, monge_map, ot_energy
from fmkinetics.analysis.tails import (
    TailFitResult,
    TailModel,
    bound_domination_check,
    compare_tail_models,
    dkw_radius,
    exponent_window_check,
    fit_exponential_tail,
    fit_polynomial_tail,
    survival_function,
)
from fmkinetics.core.errors import DomainError, InsufficientDataError, TailFitError
from fmkinetics.core.models import GaussianParams


@pytest.fixture
def exp2_samples() -> np.ndarray:
    return np.random.default_rng(0).exponential(scale=0.5, size=100_000)


@pytest.fixture
def pareto3_samples() -> np.ndarray:
    u = np.random.default_rng(1).uniform(size=100_000)
    return (1.0 - u) ** (-1.0 / 3.0)


@pytest.fixture
def gaussian_energies() -> np.ndarray:
    gt = GaussianTransport(GaussianParams(np.zeros(2), np.diag([4.0, 1.0])))
    return ot_energy(gt, monge_map(gt, np.random.default_rng(2).standard_normal((100_000, 2))))


def test_survival_counts_replicated_values() -> None:
    sf = survival_function(np.repeat([1.0, 2.0, 3.0, 4.0], 25))
    assert sf.pairs() == [(1.0, 1.0), (2.0, 0.75), (3.0, 0.5), (4.0, 0.25)]
    assert sf.at(2.5) == 0.5
    assert sf.at(5.0) == 0.0


def test_constant_samples_have_one_threshold() -> None:
    sf = survival_function(np.full(150, 3.0))
    assert sf.pairs() == [(3.0, 1.0)]
    with pytest.raises(TailFitError):
        fit_exponential_tail(sf)


def test_survival_needs_enough_samples() -> None:
    with pytest.raises(InsufficientDataError):
        survival_function(np.arange(99.0))
    with pytest.raises(DomainError):
        survival_function(np.append(np.arange(200.0), np.inf))


def test_survival_curve_is_valid(exp2_samples) -> None:
    sf = survival_function(exp2_samples)
    assert sf.survival[0] == 1.0
    assert np.all(np.diff(sf.survival) < 0.0)
    assert np.all(sf.survival > 0.0)


def test_exponential_survival_within_dkw_band(exp2_samples) -> None:
    sf = survival_function(exp2_samples)
    gap = np.max(np.abs(sf.survival - np.exp(-2.0 * sf.thresholds)))
    assert gap <= dkw_radius(sf.n)


def test_exponential_fit_recovers_rate(exp2_samples) -> None:
    fit = fit_exponential_tail(survival_function(exp2_samples), q=0.9)
    assert fit.model is TailModel.EXPONENTIAL
    assert fit.slope == pytest.approx(-2.0, abs=0.1)
    assert fit.r_squared > 0.99
    assert fit.n_tail >= 50
    assert fit.threshold_quantile == 0.9


def test_polynomial_fit_recovers_index(pareto3_samples) -> None:
    fit = fit_polynomial_tail(survival_function(pareto3_samples))
    assert fit.slope == pytest.approx(-3.0, abs=0.3)
    assert fit.r_squared > 0.99


def test_model_comparison_on_synthetic_laws(pareto3_samples) -> None:
    exp1 = np.random.default_rng(3).exponential(size=100_000)
    winner, exp_fit, poly_fit = compare_tail_models(survival_function(exp1))
    assert winner is TailModel.EXPONENTIAL
    assert poly_fit.r_squared < exp_fit.r_squared

    winner, exp_fit, poly_fit = compare_tail_models(survival_function(pareto3_samples))
    assert winner is TailModel.POLYNOMIAL


def test_fits_are_scale_equivariant(exp2_samples) -> None:
    sf = survival_function(exp2_samples)
    scaled = survival_function(3.0 * exp2_samples)
    assert fit_exponential_tail(scaled).slope == pytest.approx(fit_exponential_tail(sf).slope / 3.0, rel=1e-2)
    assert fit_polynomial_tail(scaled).slope == pytest.approx(fit_polynomial_tail(sf).slope, rel=1e-2)


def test_sparse_tail_is_rejected() -> None:
    sf = survival_function(np.repeat(np.arange(1.0, 41.0), 3))
    with pytest.raises(TailFitError):
        fit_exponential_tail(sf)


def test_trivial_bound_always_dominates(exp2_samples) -> None:
    sf = survival_function(exp2_samples)
    assert bound_domination_check(sf, lambda u: np.ones_like(u), float(sf.thresholds[0]))


def test_gaussian_energy_bound_dominates(gaussian_energies) -> None:
    gt = GaussianTransport(GaussianParams(np.zeros(2), np.diag([4.0, 1.0])))
    sf = survival_function(gaussian_energies)
    assert bound_domination_check(sf, lambda u: exp_tail_bound(gt, u), 1.0)


def test_shrunken_bound_is_flagged(gaussian_energies) -> None:
    sf = survival_function(gaussian_energies)
    assert not bound_domination_check(sf, lambda u: 0.1 * 2.0 * np.exp(-u / 4.0), 1.0)


def test_domination_check_requires_u_min_in_range(exp2_samples) -> None:
    sf = survival_function(exp2_samples)
    with pytest.raises(DomainError):
        bound_domination_check(sf, lambda u: np.ones_like(u), float(sf.thresholds[-1]) + 1.0)


def test_exponent_window() -> None:
    fit = TailFitResult(TailModel.POLYNOMIAL, -1.3, 0.0, 0.99, 100, 0.95)
    assert exponent_window_check(fit, 1.5)
    assert not exponent_window_check(fit, 2.0)
    with pytest.raises(ValueError):
        exponent_window_check(TailFitResult(TailModel.EXPONENTIAL, -1.3, 0.0, 0.99, 100, 0.95), 1.5)


def test_fit_result_serializes_model_name() -> None:
    payload = TailFitResult(TailModel.POLYNOMIAL, -1.5, 0.2, 0.98, 120, 0.95).to_dict()
    assert payload["model"] == "polynomial"
    assert set(payload) == {"model", "slope", "intercept", "r_squared", "n_tail", "threshold_quantile"}
