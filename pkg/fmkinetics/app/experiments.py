"""One runner per experiment; each writes its artifacts and returns summary rows."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
from tabulate import tabulate

from fmkinetics.analysis.diagnostics import asymmetry_grid, memorization_proxy
from fmkinetics.analysis.ot import (
    GaussianTransport,
    affine_growth_constants,
    chisq_exceedance,
    chisq_tail_bound,
    gaussian_mgf,
    monte_carlo_chisq_exceedance,
    monte_carlo_mgf,
    monte_carlo_w2_squared,
    thm1_constants,
    thm1_tail_bounds,
    w2_squared_gaussian,
)
from fmkinetics.analysis.tails import (
    TailModel,
    bound_domination_check,
    compare_tail_models,
    dkw_radius,
    exponent_window_check,
    survival_function,
)
from fmkinetics.app.artifacts import ArtifactWriter
from fmkinetics.app.settings import DatasetGenerator, ExperimentConfig, ExperimentName, GaussianSpec
from fmkinetics.core.errors import ConfigError
from fmkinetics.core.io import load_dataset, load_gaussian_params
from fmkinetics.core.models import Dataset, GaussianParams, KernelKind, SourceKernel
from fmkinetics.core.sampling import generate_dataset, sample_source
from fmkinetics.core.schedules import (
    AffineSchedule,
    load_custom_schedule,
    rectified_flow,
    regularized_rectified_flow,
    trigonometric_flow,
)
from fmkinetics.fields.empirical import EmpiricalField
from fmkinetics.fields.population import PopulationGaussianField
from fmkinetics.transport.energies import ENERGY_COLUMN, batch_energies, kinetic_column, read_energy_csv
from fmkinetics.transport.integrator import IntegratorConfig, integrate_batch

logger = logging.getLogger(__name__)


@dataclass
class RunSummary:
    experiment: ExperimentName
    rows: list[tuple[str, object]] = field(default_factory=list)
    artifacts: list[Path] = field(default_factory=list)

    def add(self, name: str, value: object) -> None:
        self.rows.append((name, value))

    def log(self) -> None:
        logger.info(
            "%s summary\n%s",
            self.experiment.value,
            tabulate(self.rows, headers=["quantity", "value"], tablefmt="grid"),
        )


# -- builders -----------------------------------------------------------------------------


def build_dataset(config: ExperimentConfig) -> Dataset:
    spec = config.dataset
    if isinstance(spec, DatasetGenerator):
        return generate_dataset(spec.kind, spec.n, spec.d, spec.seed, spec.dof, spec.max_norm)
    return load_dataset(spec)


def build_target(config: ExperimentConfig) -> GaussianParams:
    spec = config.target
    if isinstance(spec, GaussianSpec):
        return GaussianParams(np.asarray(spec.mean), np.asarray(spec.cov))
    return load_gaussian_params(spec)


def build_schedule(config: ExperimentConfig) -> AffineSchedule:
    spec = config.schedule
    if spec.kind == "rf":
        return rectified_flow()
    if spec.kind == "rf_regularized":
        return regularized_rectified_flow(spec.sigma_min)
    if spec.kind == "trig":
        return trigonometric_flow()
    try:
        return load_custom_schedule(spec.factory)
    except (ImportError, AttributeError, TypeError, ValueError) as exc:
        raise ConfigError(f"schedule.factory: {exc}") from exc


def build_kernel(config: ExperimentConfig, dim: int) -> SourceKernel:
    if config.source.kind == "student_t":
        return SourceKernel.student_t(dim, config.source.dof)
    return SourceKernel.gaussian(dim)


def build_integrator(config: ExperimentConfig) -> IntegratorConfig:
    spec = config.integrator
    return IntegratorConfig(method=spec.method, steps=spec.steps, t_end=spec.t_end)


def build_empirical_field(config: ExperimentConfig, dataset: Dataset) -> EmpiricalField:
    return EmpiricalField(dataset, build_schedule(config), build_kernel(config, dataset.dim), config.t_max)


def _is_rf_gaussian(config: ExperimentConfig) -> bool:
    rf = config.schedule.kind == "rf" or (config.schedule.kind == "rf_regularized" and config.schedule.sigma_min == 0.0)
    return rf and config.source.kind == "standard_gaussian"


# -- runners ------------------------------------------------------------------------------


def run_sample(config: ExperimentConfig, writer: ArtifactWriter, workers: int) -> RunSummary:
    summary = RunSummary(ExperimentName.SAMPLE)
    dataset = build_dataset(config)
    field_ = build_empirical_field(config, dataset)
    table = batch_energies(
        field_, field_.kernel, build_integrator(config), config.mc.seed, config.mc.count, [], workers=workers
    )
    frame = pd.DataFrame(table.endpoints, columns=[f"z{k}" for k in range(dataset.dim)])
    frame.insert(0, "sample_index", table.sample_index)
    frame[ENERGY_COLUMN] = table.energy
    writer.write_csv("endpoints.csv", frame)

    stats = memorization_proxy(field_, table.endpoints)
    writer.write_json("memorization.json", {"t_end": config.integrator.t_end, **stats.to_dict()})
    summary.add("samples", len(table))
    summary.add("median nearest distance", stats.median)
    summary.add("mean E_T", float(np.mean(table.energy)))
    return summary


def run_energy(config: ExperimentConfig, writer: ArtifactWriter, workers: int) -> RunSummary:
    summary = RunSummary(ExperimentName.ENERGY)
    dataset = build_dataset(config)
    field_ = build_empirical_field(config, dataset)
    table = batch_energies(
        field_, field_.kernel, build_integrator(config), config.mc.seed, config.mc.count,
        config.mc.probe_times, workers=workers,
    )
    writer.write_csv("energies.csv", table.to_frame())
    summary.add("trajectories", len(table))
    summary.add("mean E_T", float(np.mean(table.energy)))
    summary.add("max E_T", float(np.max(table.energy)))
    for t in table.probe_times:
        summary.add(f"mean {kinetic_column(t)}", float(np.mean(table.kinetic_at(t))))
    return summary


def _tail_samples(config: ExperimentConfig, workers: int) -> tuple[np.ndarray, Dataset | None]:
    quantity = config.tails.quantity
    if config.tails.input_csv is not None:
        try:
            table = read_energy_csv(config.tails.input_csv)
        except ValueError as exc:
            raise ConfigError(f"tails.input_csv: {exc}") from exc
        dataset = build_dataset(config) if config.dataset is not None else None
    else:
        dataset = build_dataset(config)
        field_ = build_empirical_field(config, dataset)
        probes = list(config.mc.probe_times)
        table = batch_energies(
            field_, field_.kernel, build_integrator(config), config.mc.seed, config.mc.count, probes, workers=workers
        )
    if quantity == ENERGY_COLUMN:
        return table.energy, dataset
    frame = table.to_frame()
    if quantity not in frame.columns:
        raise ConfigError(f"tails.quantity {quantity!r} not among the columns {list(frame.columns)}")
    return frame[quantity].to_numpy(), dataset


def run_tails(config: ExperimentConfig, writer: ArtifactWriter, workers: int) -> RunSummary:
    summary = RunSummary(ExperimentName.TAILS)
    samples, dataset = _tail_samples(config, workers)
    sf = survival_function(samples)
    writer.write_csv("survival.csv", sf.to_frame())

    q = config.tails.quantile
    winner, exp_fit, poly_fit = compare_tail_models(sf, q)
    best, other = (exp_fit, poly_fit) if winner is TailModel.EXPONENTIAL else (poly_fit, exp_fit)
    writer.write_json("fit.json", {**best.to_dict(), "competing": other.to_dict()})

    checks: dict[str, object] = {"quantity": config.tails.quantity, "n": sf.n, "dkw_radius": dkw_radius(sf.n)}
    if dataset is not None:
        checks["M"] = dataset.max_norm
    if _is_rf_gaussian(config) and dataset is not None:
        T = config.integrator.t_end
        if config.tails.quantity == ENERGY_COLUMN:
            bound = thm1_tail_bounds(dataset, 0.0, T)[1]
            constants = thm1_constants(dataset, 0.0, T)
            checks.update(rate=constants.c_T, prefactor=constants.C_T, threshold=constants.U_T)
        else:
            t = float(config.tails.quantity.split("@", 1)[1])
            bound = thm1_tail_bounds(dataset, t, T)[0]
            constants = thm1_constants(dataset, t, T)
            checks.update(rate=constants.c_t, prefactor=constants.C_t, threshold=constants.U_t)
        checks["dominated"] = bound_domination_check(sf, bound, float(sf.thresholds[0]))
        checks["decay_at_least_rate"] = abs(exp_fit.slope) >= checks["rate"]
    elif config.source.kind == "student_t":
        gamma = config.source.dof / 2.0
        checks.update(gamma=gamma, window=0.5, within_window=exponent_window_check(poly_fit, gamma, 0.5))
    writer.write_json("bounds.json", checks)

    summary.add("winner", winner.value)
    summary.add("exponential r2", exp_fit.r_squared)
    summary.add("polynomial r2", poly_fit.r_squared)
    summary.add("exponential slope", exp_fit.slope)
    summary.add("polynomial slope", poly_fit.slope)
    return summary


def _gradcheck_points(config: ExperimentConfig, dim: int) -> np.ndarray:
    spec = config.gradcheck
    if spec.points is not None:
        try:
            points = np.asarray(spec.points, dtype=np.float64)
        except ValueError:
            points = None
        if points is None or points.ndim != 2 or points.shape[1] != dim:
            raise ConfigError(f"gradcheck.points must be a list of {dim}-vectors")
        return points
    rng = np.random.default_rng([config.mc.seed, 1])
    return spec.probe_scale * rng.standard_normal((spec.probe_count, dim))


def run_gradcheck(config: ExperimentConfig, writer: ArtifactWriter, workers: int) -> RunSummary:
    summary = RunSummary(ExperimentName.GRADCHECK)
    if config.gradcheck.field == "population":
        field_ = PopulationGaussianField(build_target(config), config.t_max)
    else:
        field_ = build_empirical_field(config, build_dataset(config))
    points = _gradcheck_points(config, field_.dim)
    reports = asymmetry_grid(field_, config.gradcheck.times, points, config.gradcheck.fd_step)
    writer.write_json("gradcheck.json", {"field": config.gradcheck.field, "reports": [r.to_dict() for r in reports]})
    asym = np.array([r.asym_norm for r in reports])
    summary.add("probes", len(reports))
    summary.add("max asym_norm", float(asym.max()))
    summary.add("median asym_norm", float(np.median(asym)))
    return summary


def run_ot_compare(config: ExperimentConfig, writer: ArtifactWriter, workers: int) -> RunSummary:
    summary = RunSummary(ExperimentName.OT_COMPARE)
    target = build_target(config)
    gt = GaussianTransport(target)
    field_ = PopulationGaussianField(target, config.t_max)
    x = sample_source(SourceKernel(KernelKind.STANDARD_GAUSSIAN, target.dim), config.mc.seed, config.mc.count)
    batch = integrate_batch(field_, x, build_integrator(config), record_states=False)
    monge = gt.pushforward(x)
    discrepancy = np.linalg.norm(batch.endpoints - monge, axis=1)

    d = target.dim
    columns = {"sample_index": np.arange(len(x))}
    columns.update({f"x{k}": x[:, k] for k in range(d)})
    columns.update({f"rf{k}": batch.endpoints[:, k] for k in range(d)})
    columns.update({f"monge{k}": monge[:, k] for k in range(d)})
    columns["discrepancy"] = discrepancy
    writer.write_csv("ot_compare.csv", pd.DataFrame(columns))

    closed = w2_squared_gaussian(gt)
    diff = x - monge
    payload = {
        "w2_squared": closed,
        "w2_squared_monte_carlo": float(np.mean(np.sum(diff * diff, axis=1))),
        "mean_trajectory_energy": float(np.mean(batch.energies)),
        "t_end": config.integrator.t_end,
        "max_discrepancy": float(discrepancy.max()),
        "mean_discrepancy": float(discrepancy.mean()),
    }
    writer.write_json("w2.json", payload)
    summary.add("W2^2 closed form", closed)
    summary.add("W2^2 Monte Carlo", payload["w2_squared_monte_carlo"])
    summary.add("max |RF - Monge|", payload["max_discrepancy"])
    return summary


def run_bounds(config: ExperimentConfig, writer: ArtifactWriter, workers: int) -> RunSummary:
    summary = RunSummary(ExperimentName.BOUNDS)
    spec = config.bounds
    seed = config.mc.seed
    payload: dict[str, object] = {}

    if config.target is not None:
        gt = GaussianTransport(build_target(config))
        payload["gaussian_ot"] = {
            "rho": gt.rho,
            "C": gt.tail_C,
            "w2_squared": w2_squared_gaussian(gt),
            "w2_squared_monte_carlo": monte_carlo_w2_squared(gt, spec.mc_count, seed),
        }
        summary.add("rho", gt.rho)
        summary.add("C", gt.tail_C)

    if config.dataset is not None:
        dataset = build_dataset(config)
        k = thm1_constants(dataset, spec.t, spec.T)
        payload["rf_exponential_tails"] = {
            "t": spec.t,
            "T": spec.T,
            "M": dataset.max_norm,
            "d": dataset.dim,
            "c_t": k.c_t,
            "C_t": k.C_t,
            "U_t": k.U_t,
            "c_T": k.c_T,
            "C_T": k.C_T,
            "U_T": k.U_T,
            "c3": k.c3,
        }
        growth = affine_growth_constants(dataset, build_schedule(config), spec.T)
        payload["affine_growth"] = {
            "schedule": config.schedule.kind,
            "A_max": growth.a_max,
            "B_max": growth.b_max,
            "C_K": growth.kinetic_constant,
            "C_E": growth.energy_constant,
        }
        summary.add("c_T", k.c_T)
        summary.add("U_T", k.U_T)

    mgf_rows = []
    for i, case in enumerate(spec.mgf_cases):
        mean, stderr = monte_carlo_mgf(case.a, case.b, spec.mc_count, seed + i)
        exact = gaussian_mgf(case.a, case.b)
        mgf_rows.append({"a": case.a, "b": case.b, "formula": exact, "monte_carlo": mean, "stderr": stderr})
    payload["gaussian_mgf"] = mgf_rows

    bound = chisq_tail_bound(spec.chisq_s, spec.chisq_d)
    estimate = monte_carlo_chisq_exceedance(spec.chisq_s, spec.chisq_d, spec.mc_count, seed)
    payload["chisq_tail"] = {
        "s": spec.chisq_s,
        "d": spec.chisq_d,
        "bound": bound,
        "exact": chisq_exceedance(spec.chisq_s, spec.chisq_d),
        "monte_carlo": estimate,
        "dominates": estimate <= bound,
    }
    summary.add("chi-square bound", bound)
    summary.add("chi-square Monte Carlo", estimate)
    writer.write_json("bounds.json", payload)
    return summary


RUNNERS: dict[ExperimentName, Callable[[ExperimentConfig, ArtifactWriter, int], RunSummary]] = {
    ExperimentName.SAMPLE: run_sample,
    ExperimentName.ENERGY: run_energy,
    ExperimentName.TAILS: run_tails,
    ExperimentName.GRADCHECK: run_gradcheck,
    ExperimentName.OT_COMPARE: run_ot_compare,
    ExperimentName.BOUNDS: run_bounds,
}


def run_experiment(config: ExperimentConfig, output_dir: str | Path | None = None, workers: int = 1) -> RunSummary:
    writer = ArtifactWriter(output_dir or config.output_dir, config.config_hash())
    logger.info(f"Running {config.experiment.value} into {writer.output_dir}")
    summary = RUNNERS[config.experiment](config, writer, workers)
    summary.artifacts = list(writer.written)
    summary.log()
    return summary
