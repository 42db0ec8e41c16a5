"""Command-line front end.

Subcommands:

* ``fit``        run the sampler on a dataset (preset or config+data file)
                 and persist the run artifact to a directory
* ``summarize``  print the posterior table of a finished run directory
* ``simulate``   draw from the forward model and write a dataset CSV
* ``loglik-grid``tabulate the two-component known-weights log-likelihood
                 surface on a grid

Exit status is 0 only when the sampler reached a stop condition (the
sequential-marginal rule or the iteration cap) without aborting.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .engine import RunConfig, run
from .exceptions import AbcmixError, EngineAbort, ParseError
from .io import (
    ingest,
    read_particles,
    read_summary,
    write_dataset,
    write_run_artifact,
)
from .mixture import MixtureParams, ObservedDataset, PriorSpec, default_hyperparameters, loglik_grid
from .presets import PRESETS, get_preset

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PLATEAU = 3
EXIT_ABORT = 4

_CONFIG_BOOL_KEYS = {"literal_kernel_density", "use_measurement_errors"}
_CONFIG_INT_KEYS = {
    "n_particles", "n_init", "max_iterations", "max_attempts_per_particle",
    "seed", "grid_size", "n_workers",
}
_CONFIG_FLOAT_KEYS = {"quantile", "retention", "stop_threshold"}
_CONFIG_STR_KEYS = {"force_relabel_key"}
_PRIOR_LIST_KEYS = {"dirichlet_concentration", "fixed_weights", "fixed_variances"}
_PRIOR_FLOAT_KEYS = {
    "mean_prior_location", "mean_prior_variance", "precision_shape", "precision_rate",
}


def _parse_bool(raw: str, lineno: int, path) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ParseError(f"{path}:{lineno}: expected a boolean, got {raw!r}")


def parse_config_file(path) -> tuple[dict, dict]:
    """Parse a ``key = value`` config file into (run kwargs, prior kwargs)."""
    path = Path(path)
    run_kwargs: dict = {}
    prior_kwargs: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            try:
                if key in _CONFIG_BOOL_KEYS:
                    run_kwargs[key] = _parse_bool(raw, lineno, path)
                elif key in _CONFIG_INT_KEYS:
                    run_kwargs[key] = int(raw)
                elif key in _CONFIG_FLOAT_KEYS:
                    run_kwargs[key] = float(raw)
                elif key in _CONFIG_STR_KEYS:
                    run_kwargs[key] = raw or None
                elif key in _PRIOR_LIST_KEYS:
                    prior_kwargs[key] = np.array([float(x) for x in raw.split(",")])
                elif key in _PRIOR_FLOAT_KEYS:
                    prior_kwargs[key] = float(raw)
                else:
                    raise ParseError(f"{path}:{lineno}: unknown key {key!r}")
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return run_kwargs, prior_kwargs


def build_prior(prior_kwargs: dict, data: ObservedDataset) -> PriorSpec:
    """Assemble a PriorSpec, filling unset hyperparameters from the data."""
    kwargs = dict(prior_kwargs)
    if "dirichlet_concentration" not in kwargs:
        raise ParseError("config must set dirichlet_concentration (one entry per component)")
    defaults = default_hyperparameters(data.values)
    for key, value in defaults.items():
        kwargs.setdefault(key, value)
    return PriorSpec(**kwargs)


def _parse_axis(spec: str) -> np.ndarray:
    try:
        lo, hi, count = spec.split(":")
        return np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        raise ParseError(f"axis must be 'lo:hi:count', got {spec!r}") from None


def _write_diagnostic(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "diagnostic.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _float_list(raw: str) -> np.ndarray:
    return np.array([float(x) for x in raw.split(",")])


def cmd_fit(args) -> int:
    out_dir = Path(args.out)
    if args.preset:
        preset = get_preset(args.preset)
        prior, data, config = preset.build(seed=args.seed)
    else:
        if not args.config or not args.data:
            print("fit needs either --preset or both --config and --data", file=sys.stderr)
            return EXIT_USAGE
        run_kwargs, prior_kwargs = parse_config_file(args.config)
        if args.seed is not None:
            run_kwargs["seed"] = args.seed
        if "seed" not in run_kwargs:
            print("config must set a seed (wall-clock seeding is not supported)", file=sys.stderr)
            return EXIT_USAGE
        grid_size = run_kwargs.get("grid_size", 512)
        data = ingest(args.data, grid_size=grid_size)
        config = RunConfig(**run_kwargs)
        prior = build_prior(prior_kwargs, data)
    if config.use_measurement_errors and data.measurement_errors is None:
        print("use_measurement_errors set but the dataset has no error column", file=sys.stderr)
        return EXIT_USAGE

    def sink(record):
        print(
            f"iteration {record.iteration:3d}  tolerance {record.tolerance:.6f}  "
            f"acceptance {record.acceptance_rate:.4f}  ess {record.ess:.1f}  "
            f"key {record.chosen_relabel_key}",
            flush=True,
        )

    try:
        result = run(prior, data, config, sink=sink)
    except EngineAbort as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        _write_diagnostic(out_dir, {"status": "aborted", "reason": exc.reason,
                                    "message": str(exc), "details": exc.details})
        return EXIT_ABORT
    write_run_artifact(out_dir, result, config, prior)
    if args.loglik_grid:
        _emit_loglik_grid_for_fit(out_dir, prior, data)
    print(f"status: {result.status}  ({result.system.iteration} iterations, "
          f"{result.duration_seconds:.1f}s)  ->  {out_dir}")
    if result.status == "tolerance_plateau":
        _write_diagnostic(out_dir, {"status": result.status,
                                    "message": "tolerance stopped shrinking"})
        return EXIT_PLATEAU
    return EXIT_OK


def _emit_loglik_grid_for_fit(out_dir: Path, prior: PriorSpec, data: ObservedDataset) -> None:
    if prior.fixed_weights is None or prior.n_components != 2:
        print("--loglik-grid needs a two-component model with fixed weights; skipped",
              file=sys.stderr)
        return
    pad = 1.0
    lo, hi = data.values.min() - pad, data.values.max() + pad
    axis = np.linspace(lo, hi, 121)
    grid = loglik_grid(data, float(prior.fixed_weights[0]), axis, axis)
    _write_grid_files(out_dir, axis, axis, grid)


def _write_grid_files(out_dir: Path, axis1, axis2, grid) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    np.savetxt(out_dir / "loglik_axis1.csv", axis1, fmt="%.17g", delimiter=",")
    np.savetxt(out_dir / "loglik_axis2.csv", axis2, fmt="%.17g", delimiter=",")
    np.savetxt(out_dir / "loglik_grid.csv", grid, fmt="%.17g", delimiter=",")


def cmd_summarize(args) -> int:
    summary = read_summary(args.run_dir)
    posterior = summary["posterior"]
    width = max(len(name) for name in posterior)
    print(f"{'parameter':<{width}}  {'posterior mean':>16}  {'posterior sd':>14}")
    for name, stats in posterior.items():
        print(f"{name:<{width}}  {stats['mean']:>16.6g}  {stats['sd']:>14.6g}")
    print(f"\nseed {summary['seed']}  status {summary['status']}  "
          f"iterations {summary['iterations']}  ess {summary['effective_sample_size']:.1f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.preset:
        preset = get_preset(args.preset)
        data = preset.make_dataset(512)
        write_dataset(data, args.out)
        print(f"wrote {data.n} observations -> {args.out}")
        return EXIT_OK
    if args.weights is None or args.means is None or args.variances is None or args.n is None:
        print("simulate needs --preset, or --weights/--means/--variances/--n", file=sys.stderr)
        return EXIT_USAGE
    params = MixtureParams(
        _float_list(args.weights), _float_list(args.means), _float_list(args.variances)
    )
    from .mixture import simulate as simulate_op

    rng = np.random.default_rng(args.seed)
    values = simulate_op(params, args.n, rng)
    write_dataset(ObservedDataset(values=values), args.out)
    print(f"wrote {args.n} draws -> {args.out}")
    return EXIT_OK


def cmd_loglik_grid(args) -> int:
    if args.preset:
        data = get_preset(args.preset).make_dataset(512)
    elif args.data:
        data = ingest(args.data)
    else:
        print("loglik-grid needs --preset or --data", file=sys.stderr)
        return EXIT_USAGE
    axis1 = _parse_axis(args.axis1)
    axis2 = _parse_axis(args.axis2)
    grid = loglik_grid(data, args.weight, axis1, axis2)
    _write_grid_files(Path(args.out), axis1, axis2, grid)
    print(f"wrote {grid.shape[0]}x{grid.shape[1]} grid -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abcmix",
        description="Likelihood-free sequential inference for 1-D Gaussian mixtures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="run the sampler and persist the artifact")
    fit.add_argument("--preset", choices=sorted(PRESETS), help="bundled experiment")
    fit.add_argument("--config", help="key = value run/prior configuration file")
    fit.add_argument("--data", help="dataset CSV (value[,error])")
    fit.add_argument("--out", required=True, help="output directory")
    fit.add_argument("--seed", type=int, default=None, help="override the run seed")
    fit.add_argument("--loglik-grid", action="store_true",
                     help="also tabulate the known-weights log-likelihood surface")
    fit.set_defaults(func=cmd_fit)

    summ = sub.add_parser("summarize", help="print the posterior table of a run directory")
    summ.add_argument("run_dir")
    summ.set_defaults(func=cmd_summarize)

    sim = sub.add_parser("simulate", help="forward-model sampling to CSV")
    sim.add_argument("--preset", choices=sorted(PRESETS),
                     help="write the preset's observed dataset")
    sim.add_argument("--weights", help="comma-separated mixture weights")
    sim.add_argument("--means", help="comma-separated component means")
    sim.add_argument("--variances", help="comma-separated component variances")
    sim.add_argument("--n", type=int, help="number of draws")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    grid = sub.add_parser("loglik-grid", help="tabulate the two-component log likelihood")
    grid.add_argument("--preset", choices=sorted(PRESETS))
    grid.add_argument("--data", help="dataset CSV")
    grid.add_argument("--weight", type=float, default=0.7, help="first component weight")
    grid.add_argument("--axis1", default="-1:3.5:121", help="lo:hi:count for the first mean")
    grid.add_argument("--axis2", default="-1:3.5:121", help="lo:hi:count for the second mean")
    grid.add_argument("--out", required=True, help="output directory")
    grid.set_defaults(func=cmd_loglik_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AbcmixError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
