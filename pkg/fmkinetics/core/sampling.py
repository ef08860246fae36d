from __future__ import annotations

import logging

import numpy as np

from fmkinetics.config import MAX_REJECTION_BLOCKS, SAMPLE_BLOCK_ROWS
from fmkinetics.core.errors import DomainError
from fmkinetics.core.models import Dataset, KernelKind, SourceKernel

logger = logging.getLogger(__name__)


def _draw_block(kernel: SourceKernel, seed: int, block: int) -> np.ndarray:
    # Every block always draws SAMPLE_BLOCK_ROWS rows so row i depends only on (seed, i).
    rng = np.random.default_rng([seed, block])
    gauss = rng.standard_normal((SAMPLE_BLOCK_ROWS, kernel.dim))
    if kernel.kind is KernelKind.STANDARD_GAUSSIAN:
        return gauss
    chi = rng.chisquare(kernel.dof, SAMPLE_BLOCK_ROWS)
    return gauss / np.sqrt(chi / kernel.dof)[:, None]


def sample_source_rows(kernel: SourceKernel, seed: int, start: int, stop: int) -> np.ndarray:
    """Rows [start, stop) of the source stream identified by ``seed``."""
    if seed < 0:
        raise DomainError(f"seed must be non-negative, got {seed}")
    if not 0 <= start <= stop:
        raise DomainError(f"invalid row range [{start}, {stop})")
    out = np.empty((stop - start, kernel.dim), dtype=np.float64)
    first, last = start // SAMPLE_BLOCK_ROWS, (stop - 1) // SAMPLE_BLOCK_ROWS
    for block in range(first, last + 1 if stop > start else first):
        lo = max(start, block * SAMPLE_BLOCK_ROWS)
        hi = min(stop, (block + 1) * SAMPLE_BLOCK_ROWS)
        rows = _draw_block(kernel, seed, block)
        out[lo - start : hi - start] = rows[lo - block * SAMPLE_BLOCK_ROWS : hi - block * SAMPLE_BLOCK_ROWS]
    return out


def sample_source(kernel: SourceKernel, seed: int, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. source points as a (count, d) array, deterministic in ``seed``."""
    if count < 1:
        raise DomainError(f"count must be at least 1, got {count}")
    return sample_source_rows(kernel, seed, 0, count)


def _draws_within(kernel: SourceKernel, seed: int, n: int, max_norm: float) -> np.ndarray:
    # Stream order is kept, so the accepted rows depend only on (seed, max_norm).
    kept: list[np.ndarray] = []
    total = 0
    for block in range(MAX_REJECTION_BLOCKS):
        rows = sample_source_rows(kernel, seed, block * SAMPLE_BLOCK_ROWS, (block + 1) * SAMPLE_BLOCK_ROWS)
        rows = rows[np.linalg.norm(rows, axis=1) <= max_norm]
        kept.append(rows)
        total += len(rows)
        if total >= n:
            return np.concatenate(kept)[:n]
    raise DomainError(f"only {total} of {n} draws fell within max_norm={max_norm}")


def generate_dataset(
    kind: KernelKind | str, n: int, d: int, seed: int, dof: float | None = None, max_norm: float | None = None
) -> Dataset:
    """Draw a frozen dataset from the source stream, optionally keeping only draws with norm <= ``max_norm``."""
    kind = KernelKind(kind)
    kernel = SourceKernel(kind, d, dof if kind is KernelKind.STUDENT_T else None)
    if max_norm is None:
        points = sample_source(kernel, seed, n)
    elif max_norm <= 0.0:
        raise DomainError(f"max_norm must be positive, got {max_norm}")
    else:
        points = _draws_within(kernel, seed, n, max_norm)
    dataset = Dataset(points)
    logger.info("Generated %s dataset n=%d d=%d seed=%d (M=%.6g)", kind.value, n, d, seed, dataset.max_norm)
    return dataset
