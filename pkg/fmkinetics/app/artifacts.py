from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from fmkinetics import __version__
from fmkinetics.transport.energies import write_frame_csv

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays to JSON-native values; NaN and inf become null."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class ArtifactWriter:
    """Writes CSV/JSON artifacts stamped with the library version and config hash."""

    def __init__(self, output_dir: str | Path, config_sha256: str) -> None:
        self.output_dir = Path(output_dir)
        self.metadata = {"fmkinetics_version": __version__, "config_sha256": config_sha256}
        self.written: list[Path] = []

    def _target(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._target(name)
        write_frame_csv(frame, path, self.metadata)
        self.written.append(path)
        logger.info(f"Wrote {path} ({len(frame)} rows)")
        return path

    def write_json(self, name: str, payload: Mapping[str, Any]) -> Path:
        path = self._target(name)
        document = {"metadata": dict(self.metadata), **_plain(payload)}
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(document, handle, indent=2, allow_nan=False)
            handle.write("\n")
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path
