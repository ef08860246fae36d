import numpy as np
import pytest

from fmkinetics.analysis.ot import affine_growth_constants
from fmkinetics.core.errors import DomainError, IntegrationDivergedError
from fmkinetics.core.models import Dataset, GaussianParams, SourceKernel
from fmkinetics.core.sampling import sample_source
from fmkinetics.core.schedules import regularized_rectified_flow
from fmkinetics.fields.base import CallableField
from fmkinetics.fields.empirical import EmpiricalField, rectified_gaussian_field
from fmkinetics.fields.population import PopulationGaussianField
from fmkinetics.transport.integrator import (
    IntegrationMethod,
    IntegratorConfig,
    affine_energy_bound_check,
    energy_bound_check,
    integrate,
    integrate_batch,
    trajectory_norm_bound_check,
)


@pytest.fixture
def diag_field() -> PopulationGaussianField:
    return PopulationGaussianField(GaussianParams(np.array([1.0, 0.0]), np.diag([4.0, 1.0])))


def _blow_up(t: float, z: np.ndarray) -> np.ndarray:
    return z * 1e200


def test_single_point_rf_follows_the_straight_interpolant() -> None:
    x = np.array([2.0, -1.0])
    x0 = np.array([0.5, 0.5])
    field = rectified_gaussian_field(Dataset(x[None, :]))
    traj = integrate(field, x0, IntegratorConfig(IntegrationMethod.RK4, 64, 0.9))
    np.testing.assert_allclose(traj.endpoint, 0.1 * x0 + 0.9 * x, atol=1e-8)
    expected = (1.0 - traj.times)[:, None] * x0 + traj.times[:, None] * x
    np.testing.assert_allclose(traj.states, expected, atol=1e-8)


def test_symmetric_dataset_keeps_the_origin_fixed() -> None:
    field = rectified_gaussian_field(Dataset.from_points([[1.0, 0.0], [-1.0, 0.0]]))
    traj = integrate(field, np.zeros(2), IntegratorConfig())
    np.testing.assert_array_equal(traj.states, np.zeros_like(traj.states))
    assert traj.integrated_energy == 0.0


def test_population_field_reaches_the_monge_image(diag_field) -> None:
    traj = integrate(diag_field, np.array([1.0, 1.0]), IntegratorConfig(IntegrationMethod.RK4, 2048, 0.999))
    np.testing.assert_allclose(traj.endpoint, [3.0, 1.0], atol=1e-2)


def _endpoint_error(field: PopulationGaussianField, method: IntegrationMethod, steps: int) -> float:
    x0 = np.array([1.0, 1.0])
    config = IntegratorConfig(method, steps, 0.9)
    traj = integrate(field, x0, config)
    return float(np.linalg.norm(traj.endpoint - field.flow_map(0.9, x0)))


def test_euler_converges_at_first_order(diag_field) -> None:
    ratio = _endpoint_error(diag_field, IntegrationMethod.EULER, 64) / _endpoint_error(diag_field, IntegrationMethod.EULER, 128)
    assert 2.0 / 3.0 <= ratio <= 6.0


def test_rk4_converges_at_fourth_order(diag_field) -> None:
    ratio = _endpoint_error(diag_field, IntegrationMethod.RK4, 16) / _endpoint_error(diag_field, IntegrationMethod.RK4, 32)
    assert 16.0 / 3.0 <= ratio <= 48.0


def test_recomputed_energy_is_bit_identical(diag_field) -> None:
    traj = integrate(diag_field, np.array([0.3, -0.7]), IntegratorConfig(IntegrationMethod.RK4, 100, 0.95))
    assert traj.recompute_energy() == traj.integrated_energy
    assert traj.kinetic.shape == (101,)
    assert traj.t_end == pytest.approx(0.95)


def test_batch_rows_match_single_integrations(diag_field) -> None:
    x0s = np.random.default_rng(0).standard_normal((6, 2))
    config = IntegratorConfig(IntegrationMethod.EULER, 50, 0.8)
    batch = integrate_batch(diag_field, x0s, config)
    for row in (0, 5):
        single = integrate(diag_field, x0s[row], config)
        np.testing.assert_allclose(batch.endpoints[row], single.endpoint, rtol=1e-14)
        assert batch.trajectory(row).integrated_energy == pytest.approx(single.integrated_energy, rel=1e-14)


def test_unrecorded_batch_has_no_states(diag_field) -> None:
    batch = integrate_batch(diag_field, np.zeros((2, 2)), IntegratorConfig(steps=8), record_states=False)
    assert batch.states is None
    with pytest.raises(ValueError):
        batch.trajectory(0)


def test_divergence_reports_the_step() -> None:
    field = CallableField(_blow_up, 1)
    with pytest.raises(IntegrationDivergedError) as excinfo:
        integrate(field, np.array([1.0]), IntegratorConfig(IntegrationMethod.EULER, 10, 0.5))
    assert excinfo.value.step == 1


def test_divergence_reports_the_row() -> None:
    field = CallableField(_blow_up, 1)
    with pytest.raises(IntegrationDivergedError) as excinfo:
        integrate_batch(field, np.array([[0.0], [1.0]]), IntegratorConfig(IntegrationMethod.EULER, 10, 0.5))
    assert excinfo.value.sample_index == 1


def test_config_is_validated_against_the_field(diag_field) -> None:
    with pytest.raises(DomainError):
        integrate(diag_field, np.zeros(2), IntegratorConfig(steps=0))
    with pytest.raises(DomainError):
        integrate(diag_field, np.zeros(2), IntegratorConfig(t_end=0.9999))


def test_norm_bound_for_origin_start() -> None:
    dataset = Dataset.from_points([[3.0, 4.0]])
    traj = integrate(rectified_gaussian_field(dataset), np.zeros(2), IntegratorConfig(steps=64, t_end=0.95))
    assert trajectory_norm_bound_check(traj, dataset)


@pytest.mark.parametrize("count", [500, pytest.param(10_000, marks=pytest.mark.slow)])
def test_rf_trajectories_respect_norm_and_energy_bounds(count) -> None:
    rng = np.random.default_rng(4)
    dataset = Dataset(rng.standard_normal((50, 4)) * 1.5)
    field = rectified_gaussian_field(dataset)
    x0s = sample_source(SourceKernel.gaussian(4), 9, count)
    batch = integrate_batch(field, x0s, IntegratorConfig(IntegrationMethod.RK4, 128, 0.9))
    for row in range(len(batch)):
        traj = batch.trajectory(row)
        assert trajectory_norm_bound_check(traj, dataset)
        assert energy_bound_check(traj, dataset)


def test_affine_energy_bound_for_regularized_flow() -> None:
    rng = np.random.default_rng(5)
    dataset = Dataset(rng.standard_normal((10, 2)))
    schedule = regularized_rectified_flow(0.05)
    field = EmpiricalField(dataset, schedule, SourceKernel.student_t(2, 3.0))
    constants = affine_growth_constants(dataset, schedule, 0.9)
    x0s = sample_source(SourceKernel.student_t(2, 3.0), 6, 100)
    batch = integrate_batch(field, x0s, IntegratorConfig(IntegrationMethod.RK4, 64, 0.9))
    assert all(affine_energy_bound_check(batch.trajectory(row), constants) for row in range(len(batch)))


def test_affine_bound_rejects_a_longer_trajectory() -> None:
    dataset = Dataset.from_points([[1.0, 0.0]])
    constants = affine_growth_constants(dataset, regularized_rectified_flow(0.0), 0.5)
    traj = integrate(rectified_gaussian_field(dataset), np.zeros(2), IntegratorConfig(steps=16, t_end=0.9))
    with pytest.raises(DomainError):
        affine_energy_bound_check(traj, constants)
