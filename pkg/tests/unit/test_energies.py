import numpy as np
import pytest

from fmkinetics.core.errors import DomainError, IntegrationDivergedError
from fmkinetics.core.models import Dataset, SourceKernel
from fmkinetics.core.sampling import sample_source
from fmkinetics.fields.base import CallableField
from fmkinetics.fields.empirical import rectified_gaussian_field
from fmkinetics.transport.energies import batch_energies, kinetic_column, read_energy_csv
from fmkinetics.transport.integrator import IntegrationMethod, IntegratorConfig, integrate


@pytest.fixture
def field():
    points = np.random.default_rng(0).standard_t(3, size=(20, 2))
    return rectified_gaussian_field(Dataset(points))


def _blow_up_outside(t: float, z: np.ndarray) -> np.ndarray:
    return np.where(np.abs(z) > 2.5, z * 1e200, 0.0)


def test_single_row_matches_integrate(field) -> None:
    kernel = SourceKernel.gaussian(2)
    config = IntegratorConfig(IntegrationMethod.RK4, 40, 0.9)
    table = batch_energies(field, kernel, config, 5, 1, [0.0, 0.45])
    traj = integrate(field, sample_source(kernel, 5, 1)[0], config)
    assert table.energy[0] == traj.integrated_energy
    assert table.kinetic_at(0.45)[0] == traj.kinetic[20]
    np.testing.assert_array_equal(table.endpoints[0], traj.endpoint)


def test_initial_kinetic_energy_is_chi_square() -> None:
    field = rectified_gaussian_field(Dataset.from_points([[0.0]]))
    table = batch_energies(field, SourceKernel.gaussian(1), IntegratorConfig(steps=4, t_end=0.5), 3, 100_000, [0.0])
    assert float(np.mean(table.kinetic_at(0.0))) == pytest.approx(1.0, rel=0.02)


def test_tables_are_independent_of_worker_count(field) -> None:
    kernel = SourceKernel.gaussian(2)
    config = IntegratorConfig(IntegrationMethod.RK4, 32, 0.9)
    serial = batch_energies(field, kernel, config, 11, 10_000, [0.45, 0.9], workers=1)
    parallel = batch_energies(field, kernel, config, 11, 10_000, [0.45, 0.9], workers=8)
    np.testing.assert_array_equal(serial.energy, parallel.energy)
    np.testing.assert_array_equal(serial.kinetic, parallel.kinetic)
    np.testing.assert_array_equal(serial.endpoints, parallel.endpoints)


def test_probe_times_must_be_grid_nodes(field) -> None:
    with pytest.raises(DomainError):
        batch_energies(field, SourceKernel.gaussian(2), IntegratorConfig(steps=128, t_end=0.9), 0, 10, [0.5])


def test_divergence_carries_the_sample_index() -> None:
    field = CallableField(_blow_up_outside, 1)
    kernel = SourceKernel.gaussian(1)
    x0 = sample_source(kernel, 2, 2000)[:, 0]
    expected = int(np.flatnonzero(np.abs(x0) > 2.5)[0])
    with pytest.raises(IntegrationDivergedError) as excinfo:
        batch_energies(field, kernel, IntegratorConfig(IntegrationMethod.EULER, 10, 0.5), 2, 2000, [])
    assert excinfo.value.sample_index == expected


def test_parallel_divergence_reports_the_lowest_row() -> None:
    field = CallableField(_blow_up_outside, 1)
    kernel = SourceKernel.gaussian(1)
    x0 = sample_source(kernel, 4, 20_000)[:, 0]
    expected = int(np.flatnonzero(np.abs(x0) > 2.5)[0])
    config = IntegratorConfig(IntegrationMethod.EULER, 10, 0.5)
    for _ in range(3):
        with pytest.raises(IntegrationDivergedError) as excinfo:
            batch_energies(field, kernel, config, 4, 20_000, [], workers=8)
        assert excinfo.value.sample_index == expected


def test_energy_csv_round_trip_keeps_every_bit(field, tmp_path) -> None:
    table = batch_energies(field, SourceKernel.gaussian(2), IntegratorConfig(steps=32, t_end=0.9), 1, 50, [0.0, 0.45])
    path = tmp_path / "energies.csv"
    table.write_csv(path, {"config_sha256": "abc"})

    text = path.read_text(encoding="utf-8")
    assert text.startswith("# config_sha256=abc\n")
    assert "\r\n" not in text
    assert f"sample_index,E_T,{kinetic_column(0.0)},{kinetic_column(0.45)}" in text

    loaded = read_energy_csv(path)
    assert loaded.probe_times == (0.0, 0.45)
    np.testing.assert_array_equal(loaded.energy, table.energy)
    np.testing.assert_array_equal(loaded.kinetic, table.kinetic)


def test_kinetic_column_names() -> None:
    assert kinetic_column(0.5) == "K_t@0.5"
    assert kinetic_column(0.0) == "K_t@0"
