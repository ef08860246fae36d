from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from fmkinetics.config import CSV_FLOAT_FORMAT
from fmkinetics.core.errors import DatasetValidationError, NumericalError
from fmkinetics.core.models import Dataset, GaussianParams

logger = logging.getLogger(__name__)


def _require_file(path: Path) -> None:
    if not path.exists():
        logger.error(f"File not found: {path}")
        raise FileNotFoundError(f"File not found: {path}")


def _load_csv_points(path: Path) -> np.ndarray:
    try:
        frame = pd.read_csv(path, header=None, comment="#", dtype=np.float64)
    except pd.errors.EmptyDataError as exc:
        raise DatasetValidationError(f"{path}: dataset file is empty") from exc
    except ValueError as exc:
        # ragged rows or non-numeric cells
        raise DatasetValidationError(f"{path}: {exc}") from exc
    if frame.isnull().to_numpy().any():
        row = int(np.argwhere(frame.isnull().to_numpy())[0, 0])
        raise DatasetValidationError(f"{path}: row {row + 1} is missing coordinates")
    return frame.to_numpy(dtype=np.float64)


def _load_json_points(path: Path) -> np.ndarray:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetValidationError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, list) or not raw:
        raise DatasetValidationError(f"{path}: expected a non-empty JSON array of points")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
            raise DatasetValidationError(f"{path}: point {i} is not an array of numbers")
        rows.append(row)
    if len({len(row) for row in rows}) != 1:
        raise DatasetValidationError(f"{path}: points have inconsistent dimensions")
    return np.asarray(rows, dtype=np.float64)


def load_dataset(path: str | Path) -> Dataset:
    """Load points from CSV (no header, one row per point) or a JSON array-of-arrays."""
    path = Path(path)
    _require_file(path)
    if path.suffix.lower() == ".json":
        points = _load_json_points(path)
    else:
        points = _load_csv_points(path)
    dataset = Dataset(points)
    logger.info(f"Loaded dataset {path} with N={dataset.size}, d={dataset.dim}, M={dataset.max_norm:.6g}")
    return dataset


def save_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(dataset.points).to_csv(
        path, header=False, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"
    )
    logger.debug(f"Saved dataset to {path} ({dataset.size} rows)")


def load_gaussian_params(path: str | Path) -> GaussianParams:
    """Load ``{"mean": [...], "cov": [[...], ...]}``."""
    path = Path(path)
    _require_file(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetValidationError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict) or "mean" not in raw or "cov" not in raw:
        raise DatasetValidationError(f"{path}: expected an object with 'mean' and 'cov'")
    try:
        return GaussianParams(np.asarray(raw["mean"], dtype=np.float64), np.asarray(raw["cov"], dtype=np.float64))
    except (TypeError, ValueError, NumericalError) as exc:
        raise DatasetValidationError(f"{path}: {exc}") from exc
