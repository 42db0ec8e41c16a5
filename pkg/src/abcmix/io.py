"""Dataset ingestion and on-disk run artifacts.

Datasets are CSV files with a ``value`` column and an optional ``error``
column (per-observation measurement standard deviations).  A finished run
is persisted as a directory: the final particle table, per-iteration
telemetry, a JSON summary, and plot-ready marginal density grids.  All
floats are written with 17 significant digits so every file re-parses to
the exact in-memory values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import ParticleSystem, RunConfig, RunResult
from .exceptions import ParseError
from .kernels import weighted_variance
from .mixture import ObservedDataset, PriorSpec
from .summaries import kde_weighted

FLOAT_FMT = "%.17g"


def _fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def ingest(path, grid_size: int = 512) -> ObservedDataset:
    """Read a dataset CSV (`value` or `value,error` header)."""
    path = Path(path)
    values: list[float] = []
    errors: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if header == ["value"]:
            with_errors = False
        elif header == ["value", "error"]:
            with_errors = True
        else:
            raise ParseError(f"{path}:1: header must be 'value' or 'value,error', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values.append(float(row[0]))
                if with_errors:
                    errors.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if with_errors and any(e < 0.0 for e in errors):
        raise ParseError(f"{path}: negative measurement error")
    return ObservedDataset(
        values=np.asarray(values),
        measurement_errors=np.asarray(errors) if with_errors else None,
        grid_size=grid_size,
    )


def write_dataset(dataset: ObservedDataset, path) -> None:
    """Write a dataset in the format ``ingest`` reads, losslessly."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if dataset.measurement_errors is None:
            writer.writerow(["value"])
            for v in dataset.values:
                writer.writerow([_fmt(v)])
        else:
            writer.writerow(["value", "error"])
            for v, e in zip(dataset.values, dataset.measurement_errors):
                writer.writerow([_fmt(v), _fmt(e)])


def particle_columns(n_components: int) -> list[str]:
    k = n_components
    return (
        [f"weight_{i + 1}" for i in range(k)]
        + [f"mean_{i + 1}" for i in range(k)]
        + [f"var_{i + 1}" for i in range(k)]
        + ["importance_weight", "distance"]
    )


def write_particles(system: ParticleSystem, path) -> None:
    cols = particle_columns(system.n_components)
    table = np.column_stack(
        [system.weights, system.means, system.variances,
         system.importance_weights, system.distances]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in table:
            writer.writerow([_fmt(x) for x in row])


def read_particles(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    return header, np.asarray(rows)


def posterior_summary(system: ParticleSystem) -> dict[str, dict[str, float]]:
    """Importance-weighted posterior mean and sd of every parameter column."""
    w = system.importance_weights
    out: dict[str, dict[str, float]] = {}
    cols = particle_columns(system.n_components)[: 3 * system.n_components]
    table = np.column_stack([system.weights, system.means, system.variances])
    for name, values in zip(cols, table.T):
        mean = float(np.sum(w * values))
        out[name] = {"mean": mean, "sd": float(np.sqrt(weighted_variance(values, w)))}
    return out


def write_telemetry(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["iteration", "tolerance", "acceptance_rate", "ess", "chosen_relabel_key"]
        )
        for r in records:
            writer.writerow(
                [r.iteration, _fmt(r.tolerance), _fmt(r.acceptance_rate), _fmt(r.ess),
                 r.chosen_relabel_key]
            )


def write_marginals(system: ParticleSystem, prior: PriorSpec, out_dir: Path, grid_size: int) -> None:
    """Plot-ready weighted-KDE grids for every free parameter marginal."""
    from .engine import _free_marginals

    out_dir.mkdir(parents=True, exist_ok=True)
    for name, values in _free_marginals(system, prior):
        summary = kde_weighted(values, system.importance_weights, grid_size)
        with open(out_dir / f"{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["grid", "density"])
            for g, d in zip(summary.grid, summary.density):
                writer.writerow([_fmt(g), _fmt(d)])


def config_as_dict(config: RunConfig) -> dict:
    return {
        "n_particles": config.n_particles,
        "n_init": config.n_init,
        "quantile": config.quantile,
        "retention": config.retention,
        "stop_threshold": config.stop_threshold,
        "max_iterations": config.max_iterations,
        "max_attempts_per_particle": config.max_attempts_per_particle,
        "seed": config.seed,
        "grid_size": config.grid_size,
        "literal_kernel_density": config.literal_kernel_density,
        "use_measurement_errors": config.use_measurement_errors,
        "force_relabel_key": config.force_relabel_key,
        "n_workers": config.n_workers,
    }


def prior_as_dict(prior: PriorSpec) -> dict:
    return {
        "dirichlet_concentration": list(prior.dirichlet_concentration),
        "mean_prior_location": prior.mean_prior_location,
        "mean_prior_variance": prior.mean_prior_variance,
        "precision_shape": prior.precision_shape,
        "precision_rate": prior.precision_rate,
        "fixed_weights": None if prior.fixed_weights is None else list(prior.fixed_weights),
        "fixed_variances": None if prior.fixed_variances is None else list(prior.fixed_variances),
    }


def write_run_artifact(
    out_dir,
    result: RunResult,
    config: RunConfig,
    prior: PriorSpec,
) -> Path:
    """Persist a finished run: particle table, telemetry, summary, marginals."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_particles(result.system, out_dir / "particles_final.csv")
    write_telemetry(result.records, out_dir / "telemetry.csv")
    write_marginals(result.system, prior, out_dir / "marginals", config.grid_size)
    summary = {
        "posterior": posterior_summary(result.system),
        "seed": config.seed,
        "status": result.status,
        "iterations": result.system.iteration,
        "final_tolerance": result.system.tolerance,
        "effective_sample_size": result.system.effective_sample_size,
        "duration_seconds": result.duration_seconds,
        "config": config_as_dict(config),
        "prior": prior_as_dict(prior),
    }
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return out_dir


def read_summary(run_dir) -> dict:
    path = Path(run_dir) / "summary.json"
    if not path.exists():
        raise FileNotFoundError(f"no summary.json in {run_dir}")
    with open(path) as fh:
        return json.load(fh)
