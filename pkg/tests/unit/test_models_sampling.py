import numpy as np
import pytest
from scipy import stats

from fmkinetics.config import SAMPLE_BLOCK_ROWS
from fmkinetics.core.errors import DatasetValidationError, DomainError, NumericalError
from fmkinetics.core.models import Dataset, GaussianParams, KernelKind, SourceKernel
from fmkinetics.core.sampling import generate_dataset, sample_source, sample_source_rows


def test_dataset_computes_dimension_and_max_norm() -> None:
    dataset = Dataset.from_points([[3.0, 4.0], [1.0, 0.0]])
    assert dataset.size == 2
    assert dataset.dim == 2
    assert dataset.max_norm == pytest.approx(5.0)


def test_dataset_copies_and_freezes_points() -> None:
    raw = np.ones((3, 2))
    dataset = Dataset(raw)
    assert raw.flags.writeable
    with pytest.raises(ValueError):
        dataset.points[0, 0] = 2.0


def test_dataset_rejects_non_finite_rows() -> None:
    with pytest.raises(DatasetValidationError, match="row 1"):
        Dataset(np.array([[0.0, 1.0], [np.nan, 2.0]]))


def test_dataset_rejects_ragged_rows() -> None:
    with pytest.raises(DatasetValidationError):
        Dataset.from_points([[0.0, 1.0], [2.0]])


def test_gaussian_params_validate_covariance() -> None:
    with pytest.raises(NumericalError):
        GaussianParams(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NumericalError):
        GaussianParams(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(DatasetValidationError):
        GaussianParams(np.zeros(3), np.eye(2))


def test_gaussian_params_spectral_reconstructs_covariance() -> None:
    cov = np.array([[2.0, 0.3], [0.3, 1.0]])
    params = GaussianParams(np.zeros(2), cov)
    np.testing.assert_allclose(params.spectral(lambda lam: lam), cov, atol=1e-14)
    assert not params.is_identity()
    assert GaussianParams(np.zeros(2), np.eye(2)).is_identity()


def test_kernel_parameters_outside_domain() -> None:
    with pytest.raises(DomainError):
        SourceKernel(KernelKind.STUDENT_T, 2)
    with pytest.raises(DomainError):
        SourceKernel.student_t(2, 0.0)
    with pytest.raises(DomainError):
        SourceKernel(KernelKind.STANDARD_GAUSSIAN, 2, 3.0)
    with pytest.raises(DomainError):
        SourceKernel.gaussian(0)
    assert SourceKernel.student_t(2, 3.0).tail_index == 3.0
    assert SourceKernel.gaussian(2).tail_index is None


def test_sample_source_is_deterministic_in_seed() -> None:
    kernel = SourceKernel.gaussian(3)
    first = sample_source(kernel, 42, 500)
    np.testing.assert_array_equal(first, sample_source(kernel, 42, 500))
    assert not np.array_equal(first, sample_source(kernel, 43, 500))


def test_sample_rows_do_not_depend_on_the_requested_range() -> None:
    kernel = SourceKernel.student_t(2, 4.0)
    full = sample_source(kernel, 7, SAMPLE_BLOCK_ROWS + 200)
    window = sample_source_rows(kernel, 7, SAMPLE_BLOCK_ROWS - 50, SAMPLE_BLOCK_ROWS + 100)
    np.testing.assert_array_equal(window, full[SAMPLE_BLOCK_ROWS - 50 : SAMPLE_BLOCK_ROWS + 100])


def test_sample_source_rejects_empty_count() -> None:
    with pytest.raises(DomainError):
        sample_source(SourceKernel.gaussian(1), 0, 0)


def test_standard_gaussian_moments() -> None:
    x = sample_source(SourceKernel.gaussian(2), 1, 1_000_000)
    assert np.all(np.abs(x.mean(axis=0)) < 4e-3)
    assert np.all(np.abs(x.var(axis=0) - 1.0) < 1e-2)


def test_student_t_tail_matches_exact_law() -> None:
    x = sample_source(SourceKernel.student_t(1, 3.0), 2, 1_000_000)[:, 0]
    empirical = float(np.mean(np.abs(x) > 10.0))
    exact = 2.0 * stats.t.sf(10.0, df=3)
    assert exact / 2.0 <= empirical <= 2.0 * exact


def test_generate_dataset_matches_source_draws() -> None:
    dataset = generate_dataset("student_t", 20, 2, 7, dof=3)
    expected = sample_source(SourceKernel.student_t(2, 3.0), 7, 20)
    np.testing.assert_array_equal(dataset.points, expected)


def test_generate_dataset_keeps_stream_draws_within_max_norm() -> None:
    dataset = generate_dataset("student_t", 20, 2, 7, dof=3, max_norm=2.0)
    stream = sample_source(SourceKernel.student_t(2, 3.0), 7, 1024)
    expected = stream[np.linalg.norm(stream, axis=1) <= 2.0][:20]
    np.testing.assert_array_equal(dataset.points, expected)
    assert dataset.max_norm <= 2.0
    assert generate_dataset("student_t", 20, 2, 7, dof=3, max_norm=2.0).points.tobytes() == dataset.points.tobytes()


def test_generate_dataset_rejects_unreachable_max_norm() -> None:
    with pytest.raises(DomainError):
        generate_dataset("standard_gaussian", 5, 2, 0, max_norm=0.0)
    with pytest.raises(DomainError, match="within max_norm"):
        generate_dataset("standard_gaussian", 5, 2, 0, max_norm=1e-12)
