from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from enum import Enum
from pathlib import Path
from typing import Any, List, Literal, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from fmkinetics.config import DEFAULT_METHOD, DEFAULT_STEPS, DEFAULT_T_END, SEED_OVERRIDE_ENV, T_MAX, TAIL_QUANTILE
from fmkinetics.core.errors import ConfigError

logger = logging.getLogger(__name__)


class ExperimentName(str, Enum):
    SAMPLE = "sample"
    ENERGY = "energy"
    TAILS = "tails"
    GRADCHECK = "gradcheck"
    OT_COMPARE = "ot-compare"
    BOUNDS = "bounds"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetGenerator(_Strict):
    """Inline dataset drawn once from a source distribution and then frozen."""
    kind: Literal["standard_gaussian", "gaussian", "student_t"]
    n: int = Field(ge=1)
    d: int = Field(ge=1)
    seed: int = Field(ge=0)
    dof: Optional[float] = Field(default=None, gt=0)
    max_norm: Optional[float] = Field(default=None, gt=0, description="keep only draws with norm <= max_norm")

    @model_validator(mode="after")
    def dof_matches_kind(self) -> "DatasetGenerator":
        if self.kind == "gaussian":
            self.kind = "standard_gaussian"
        if self.kind == "student_t" and self.dof is None:
            raise ValueError("student_t generator requires dof")
        if self.kind == "standard_gaussian" and self.dof is not None:
            raise ValueError("standard_gaussian generator takes no dof")
        return self


class SourceSpec(_Strict):
    kind: Literal["standard_gaussian", "student_t"] = "standard_gaussian"
    dof: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def dof_matches_kind(self) -> "SourceSpec":
        if self.kind == "student_t" and self.dof is None:
            raise ValueError("student_t source requires dof")
        if self.kind == "standard_gaussian" and self.dof is not None:
            raise ValueError("standard_gaussian source takes no dof")
        return self


class ScheduleSpec(_Strict):
    kind: Literal["rf", "rf_regularized", "trig", "custom"] = "rf"
    sigma_min: Optional[float] = None
    factory: Optional[str] = Field(default=None, description="'module:function' returning an AffineSchedule")

    @field_validator("sigma_min")
    @classmethod
    def sigma_min_in_range(cls, v):
        if v is not None and not 0.0 <= v < 1.0:
            raise ValueError("sigma_min must lie in [0, 1)")
        return v

    @model_validator(mode="after")
    def validate_kind_requirements(self) -> "ScheduleSpec":
        if self.kind == "rf_regularized" and self.sigma_min is None:
            raise ValueError("rf_regularized schedule requires sigma_min")
        if self.kind == "custom" and not self.factory:
            raise ValueError("custom schedule requires factory")
        return self


class IntegratorSpec(_Strict):
    method: Literal["euler", "rk4"] = DEFAULT_METHOD
    steps: int = Field(default=DEFAULT_STEPS, ge=1)
    t_end: float = Field(default=DEFAULT_T_END, gt=0.0, lt=1.0)


class MonteCarloSpec(_Strict):
    seed: int = Field(default=0, ge=0)
    count: int = Field(default=1000, ge=1)
    probe_times: List[float] = Field(default_factory=list)

    @field_validator("probe_times")
    @classmethod
    def probes_in_unit_interval(cls, v):
        if any(not 0.0 <= t < 1.0 for t in v):
            raise ValueError("probe_times must lie in [0, 1)")
        return v


class GaussianSpec(_Strict):
    mean: List[float]
    cov: List[List[float]]

    @model_validator(mode="after")
    def square_covariance(self) -> "GaussianSpec":
        d = len(self.mean)
        if d == 0:
            raise ValueError("mean must be non-empty")
        if len(self.cov) != d or any(len(row) != d for row in self.cov):
            raise ValueError(f"cov must be a {d}x{d} matrix")
        return self


class TailsSpec(_Strict):
    quantile: float = Field(default=TAIL_QUANTILE, gt=0.0, lt=1.0)
    quantity: str = Field(default="E_T", description="'E_T' or a kinetic column such as 'K_t@0.5'")
    input_csv: Optional[str] = None


class GradcheckSpec(_Strict):
    field: Literal["empirical", "population"] = "empirical"
    times: List[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75])
    points: Optional[List[List[float]]] = None
    probe_count: int = Field(default=8, ge=1)
    probe_scale: float = Field(default=1.0, gt=0.0)
    fd_step: Optional[float] = Field(default=None, gt=0.0)


class MgfCase(_Strict):
    a: float
    b: float = Field(lt=0.5)


class BoundsSpec(_Strict):
    t: float = Field(default=0.5, ge=0.0, lt=1.0)
    T: float = Field(default=0.9, gt=0.0, lt=1.0)
    mgf_cases: List[MgfCase] = Field(
        default_factory=lambda: [MgfCase(a=0.0, b=0.25), MgfCase(a=1.0, b=0.1), MgfCase(a=2.0, b=0.3)]
    )
    chisq_s: float = Field(default=2.0, ge=2.0)
    chisq_d: int = Field(default=16, ge=1)
    mc_count: int = Field(default=1_000_000, ge=1)

    @model_validator(mode="after")
    def t_before_horizon(self) -> "BoundsSpec":
        if self.t > self.T:
            raise ValueError("t must not exceed T")
        return self


class ExperimentConfig(_Strict):
    """Validated experiment description; one experiment per invocation."""
    experiment: ExperimentName
    dataset: Optional[Union[str, DatasetGenerator]] = None
    source: SourceSpec = Field(default_factory=SourceSpec)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    integrator: IntegratorSpec = Field(default_factory=IntegratorSpec)
    mc: MonteCarloSpec = Field(default_factory=MonteCarloSpec)
    target: Optional[Union[str, GaussianSpec]] = None
    t_max: float = Field(default=T_MAX, gt=0.0, lt=1.0)
    tails: TailsSpec = Field(default_factory=TailsSpec)
    gradcheck: GradcheckSpec = Field(default_factory=GradcheckSpec)
    bounds: BoundsSpec = Field(default_factory=BoundsSpec)
    output_dir: str = "output"

    @model_validator(mode="after")
    def validate_experiment_requirements(self) -> "ExperimentConfig":
        name = self.experiment
        needs_dataset = name in {ExperimentName.SAMPLE, ExperimentName.ENERGY, ExperimentName.GRADCHECK}
        if name is ExperimentName.TAILS and self.tails.input_csv is None:
            needs_dataset = True
        if name is ExperimentName.GRADCHECK and self.gradcheck.field == "population":
            needs_dataset = False
        if needs_dataset and self.dataset is None:
            raise ValueError(f"experiment {name.value} requires dataset")
        needs_target = name is ExperimentName.OT_COMPARE or (
            name is ExperimentName.GRADCHECK and self.gradcheck.field == "population"
        )
        if needs_target and self.target is None:
            raise ValueError(f"experiment {name.value} requires target")
        if self.integrator.t_end > self.t_max:
            raise ValueError(f"integrator.t_end={self.integrator.t_end} exceeds t_max={self.t_max}")
        quantity = self.tails.quantity
        if quantity != "E_T":
            head, sep, tail = quantity.partition("@")
            try:
                probe = float(tail)
            except ValueError:
                probe = None
            if head != "K_t" or not sep or probe is None:
                raise ValueError(f"tails.quantity must be 'E_T' or 'K_t@<time>', got {quantity!r}")
            if self.tails.input_csv is None and not any(abs(probe - t) <= 1e-12 for t in self.mc.probe_times):
                raise ValueError(f"tails.quantity {quantity!r} needs {probe} in mc.probe_times")
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of everything except the output location."""
        payload = self.model_dump(mode="json", exclude={"output_dir"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# -- loading ------------------------------------------------------------------------------


def _locate(text: str, loc: tuple, yaml_style: bool) -> int | None:
    """Best-effort 1-based line of the last key in ``loc``, searching in path order."""
    line = None
    offset = 0
    for key in loc:
        if not isinstance(key, str):
            continue
        pattern = rf"^\s*-?\s*{re.escape(key)}\s*:" if yaml_style else rf'"{re.escape(key)}"\s*:'
        match = re.compile(pattern, re.MULTILINE).search(text, offset)
        if match is None:
            break
        offset = match.end()
        line = text.count("\n", 0, match.start()) + 1
    return line


def _parse(path: Path, text: str) -> Any:
    if path.suffix.lower() in {".yaml", ".yml"}:
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"invalid YAML: {exc}", source=str(path), line=mark.line + 1 if mark else None) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", source=str(path), line=exc.lineno) from exc


def _apply_seed_override(raw: dict[str, Any]) -> None:
    value = os.getenv(SEED_OVERRIDE_ENV)
    if value is None or value.strip() == "":
        return
    try:
        seed = int(value)
    except ValueError as exc:
        raise ConfigError(f"{SEED_OVERRIDE_ENV} must be an integer, got {value!r}") from exc
    if seed < 0:
        raise ConfigError(f"{SEED_OVERRIDE_ENV} must be non-negative, got {seed}")
    logger.warning("Overriding all config seeds with %s=%d", SEED_OVERRIDE_ENV, seed)
    raw.setdefault("mc", {})
    if isinstance(raw["mc"], dict):
        raw["mc"]["seed"] = seed
    if isinstance(raw.get("dataset"), dict):
        raw["dataset"]["seed"] = seed


def _resolve_path(value: str, loc: tuple, base: Path, path: Path, text: str, yaml_style: bool) -> str:
    resolved = Path(value) if Path(value).is_absolute() else base / value
    if not resolved.exists():
        raise ConfigError(
            f"{'.'.join(loc)}: file not found: {value}", source=str(path), line=_locate(text, loc, yaml_style)
        )
    return str(resolved)


def _resolve_inputs(config: ExperimentConfig, base: Path, path: Path, text: str, yaml_style: bool) -> ExperimentConfig:
    updates: dict[str, Any] = {}
    if isinstance(config.dataset, str):
        updates["dataset"] = _resolve_path(config.dataset, ("dataset",), base, path, text, yaml_style)
    if isinstance(config.target, str):
        updates["target"] = _resolve_path(config.target, ("target",), base, path, text, yaml_style)
    if config.tails.input_csv is not None:
        input_csv = _resolve_path(config.tails.input_csv, ("tails", "input_csv"), base, path, text, yaml_style)
        updates["tails"] = config.tails.model_copy(update={"input_csv": input_csv})
    return config.model_copy(update=updates) if updates else config


def load_experiment_config(config_path: Union[str, Path], experiment: str | None = None) -> ExperimentConfig:
    """Load, override and validate an experiment config from JSON or YAML.

    Relative input paths are resolved against the config file's directory and an
    explicit ``experiment`` replaces the one named in the file.
    Every failure surfaces as ConfigError with the offending line when known.
    """
    load_dotenv()
    config_path = Path(config_path)
    if not config_path.exists():
        logger.error(f"Configuration file not found: {config_path}")
        raise ConfigError("configuration file not found", source=str(config_path))

    text = config_path.read_text(encoding="utf-8")
    yaml_style = config_path.suffix.lower() in {".yaml", ".yml"}
    raw = _parse(config_path, text)
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}", source=str(config_path), line=1)

    if experiment is not None:
        raw["experiment"] = experiment
    _apply_seed_override(raw)
    try:
        config = ExperimentConfig(**raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = tuple(first.get("loc", ()))
        where = ".".join(str(part) for part in loc) or "config"
        raise ConfigError(
            f"{where}: {first.get('msg', 'invalid value')}",
            source=str(config_path),
            line=_locate(text, loc, yaml_style),
        ) from exc

    config = _resolve_inputs(config, config_path.parent, config_path, text, yaml_style)
    logger.info(f"Loaded {config.experiment.value} experiment from {config_path} (sha256 {config.config_hash()[:12]})")
    return config
