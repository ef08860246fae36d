from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from fmkinetics.config import BATCH_BLOCK_ROWS, CSV_FLOAT_FORMAT
from fmkinetics.core.errors import DomainError, IntegrationDivergedError
from fmkinetics.core.models import SourceKernel
from fmkinetics.core.sampling import sample_source_rows
from fmkinetics.fields.base import VelocityField
from fmkinetics.transport.integrator import IntegratorConfig, integrate_batch

logger = logging.getLogger(__name__)

ENERGY_COLUMN = "E_T"
INDEX_COLUMN = "sample_index"
KINETIC_PREFIX = "K_t@"


def kinetic_column(t: float) -> str:
    return f"{KINETIC_PREFIX}{t:g}"


@dataclass(frozen=True, slots=True, eq=False)
class EnergyTable:
    """Per-trajectory integrated energy and kinetic energy at probe times."""

    probe_times: tuple[float, ...]
    sample_index: np.ndarray  # (n,)
    energy: np.ndarray        # (n,)
    kinetic: np.ndarray       # (n, len(probe_times))
    endpoints: np.ndarray | None = None  # (n, d)

    def __len__(self) -> int:
        return int(self.sample_index.shape[0])

    def kinetic_at(self, t: float) -> np.ndarray:
        for j, probe in enumerate(self.probe_times):
            if np.isclose(probe, t, rtol=0.0, atol=1e-12):
                return self.kinetic[:, j]
        raise KeyError(f"no kinetic column for t={t}")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({INDEX_COLUMN: self.sample_index, ENERGY_COLUMN: self.energy})
        for j, t in enumerate(self.probe_times):
            frame[kinetic_column(t)] = self.kinetic[:, j]
        return frame

    def write_csv(self, path: str | Path, metadata: Mapping[str, str] | None = None) -> None:
        write_frame_csv(self.to_frame(), path, metadata)


def write_frame_csv(frame: pd.DataFrame, path: str | Path, metadata: Mapping[str, str] | None = None) -> None:
    """Write ``# key=value`` comment lines, then the frame with 17-significant-digit floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}={value}\n")
        frame.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")


def read_energy_csv(path: str | Path) -> EnergyTable:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Energy table not found: {path}")
    frame = pd.read_csv(path, comment="#")
    if INDEX_COLUMN not in frame.columns or ENERGY_COLUMN not in frame.columns:
        raise ValueError(f"{path}: expected columns {INDEX_COLUMN!r} and {ENERGY_COLUMN!r}")
    probe_columns = [c for c in frame.columns if c.startswith(KINETIC_PREFIX)]
    return EnergyTable(
        probe_times=tuple(float(c[len(KINETIC_PREFIX):]) for c in probe_columns),
        sample_index=frame[INDEX_COLUMN].to_numpy(dtype=np.int64),
        energy=frame[ENERGY_COLUMN].to_numpy(dtype=np.float64),
        kinetic=frame[probe_columns].to_numpy(dtype=np.float64).reshape(len(frame), len(probe_columns)),
    )


def _probe_nodes(times: np.ndarray, probe_times: Sequence[float]) -> list[int]:
    nodes = []
    tol = 1e-9 * max(1.0, float(times[-1]))
    for t in probe_times:
        hits = np.flatnonzero(np.abs(times - t) <= tol)
        if not hits.size:
            raise DomainError(f"probe time {t} is not a node of the integration grid")
        nodes.append(int(hits[0]))
    return nodes


def _run_block(
    field: VelocityField,
    kernel: SourceKernel,
    config: IntegratorConfig,
    seed: int,
    start: int,
    stop: int,
    nodes: list[int],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x0s = sample_source_rows(kernel, seed, start, stop)
    try:
        batch = integrate_batch(field, x0s, config, record_states=False)
    except IntegrationDivergedError as exc:
        raise exc.with_sample(start + (exc.sample_index or 0)) from None
    logger.debug("Integrated rows [%d, %d)", start, stop)
    return batch.energies, batch.kinetic[:, nodes], batch.endpoints


def batch_energies(
    field: VelocityField,
    kernel: SourceKernel,
    config: IntegratorConfig,
    seed: int,
    count: int,
    probe_times: Sequence[float],
    *,
    workers: int = 1,
) -> EnergyTable:
    """Integrate ``count`` source draws and tabulate E_T and K_t at the probe times.

    Rows are integrated in fixed blocks of BATCH_BLOCK_ROWS and placed by block
    index, so the table is identical for any number of workers.
    """
    if count < 1:
        raise DomainError(f"count must be at least 1, got {count}")
    if workers < 1:
        raise DomainError(f"workers must be at least 1, got {workers}")
    if kernel.dim != field.dim:
        raise ValueError(f"source dimension {kernel.dim} != field dimension {field.dim}")
    config.validate(field)
    nodes = _probe_nodes(config.grid(), probe_times)

    bounds = [(lo, min(lo + BATCH_BLOCK_ROWS, count)) for lo in range(0, count, BATCH_BLOCK_ROWS)]
    results: list[tuple[np.ndarray, np.ndarray, np.ndarray] | None] = [None] * len(bounds)
    logger.info(
        "Integrating %d trajectories in %d blocks (%s, %d steps, t_end=%g, workers=%d)",
        count, len(bounds), config.method.value, config.steps, config.t_end, workers,
    )
    if workers == 1:
        for i, (lo, hi) in enumerate(bounds):
            results[i] = _run_block(field, kernel, config, seed, lo, hi, nodes)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_run_block, field, kernel, config, seed, lo, hi, nodes) for lo, hi in bounds]
            # Block order, so the lowest diverging row is the one reported.
            for i, future in enumerate(futures):
                results[i] = future.result()

    return EnergyTable(
        probe_times=tuple(float(t) for t in probe_times),
        sample_index=np.arange(count, dtype=np.int64),
        energy=np.concatenate([r[0] for r in results]),
        kinetic=np.concatenate([r[1] for r in results]),
        endpoints=np.concatenate([r[2] for r in results]),
    )
