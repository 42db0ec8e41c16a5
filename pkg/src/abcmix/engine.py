"""The sequential ABC sampling loop.

Iteration 1 draws a large batch from the prior, simulates each draw, and
keeps the N closest to the observations; later iterations propose from the
previous weighted population, perturb with the kernels, and accept against
a tolerance that shrinks to a quantile of the previously accepted
distances.  Each iteration ends with importance reweighting and
relabeling.  The loop stops when consecutive marginal posteriors agree in
Hellinger distance, or at an iteration cap.

Randomness is organized as one counter-based stream per (seed, iteration,
slot), so results are bit-identical no matter how the per-slot acceptance
loops are scheduled (sequentially or across workers).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace as dataclass_replace
from time import perf_counter

import numpy as np

from .exceptions import DegenerateSampleError, EngineAbort
from .kernels import (
    KernelScales,
    WeightDiagnostics,
    compute_scales,
    importance_weights_batch,
    perturb_mean,
    perturb_variance,
    resample_weights,
)
from .mixture import (
    VARIANCE_FLOOR,
    MixtureParams,
    ObservedDataset,
    PriorSpec,
    sample_prior_batch,
    simulate_values,
    simulate_values_with_errors,
)
from .relabel import RelabelReport, relabel
from .summaries import abc_distance, hellinger, kde_weighted

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Particle:
    """One accepted parameter point with its importance weight and the
    distance its simulated dataset achieved."""

    params: MixtureParams
    importance_weight: float
    distance: float


@dataclass(frozen=True)
class ParticleSystem:
    """The weighted population of one iteration, stored column-wise.

    ``weights``, ``means`` and ``variances`` are (N, K); row i holds
    particle i's components.  ``importance_weights`` are normalized;
    every ``distances`` entry is at most ``tolerance``.  ``scales`` are
    the kernel scales used to *produce* this system (absent at t=1).
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    importance_weights: np.ndarray
    distances: np.ndarray
    iteration: int
    tolerance: float
    scales: KernelScales | None = None

    def __post_init__(self):
        for name in ("weights", "means", "variances", "importance_weights", "distances"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n, k = self.weights.shape
        if self.means.shape != (n, k) or self.variances.shape != (n, k):
            raise ValueError("weights, means, variances must share the same (N, K) shape")
        if self.importance_weights.shape != (n,) or self.distances.shape != (n,):
            raise ValueError("importance_weights and distances must have shape (N,)")
        if abs(float(self.importance_weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("importance weights must be normalized")
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be strictly positive")
        if np.any(self.distances > self.tolerance):
            raise ValueError("every accepted distance must be at most the tolerance")

    @property
    def n_particles(self) -> int:
        return self.weights.shape[0]

    @property
    def n_components(self) -> int:
        return self.weights.shape[1]

    @property
    def effective_sample_size(self) -> float:
        return 1.0 / float(np.sum(self.importance_weights**2))

    def particle(self, i: int) -> Particle:
        return Particle(
            params=MixtureParams(self.weights[i], self.means[i], self.variances[i]),
            importance_weight=float(self.importance_weights[i]),
            distance=float(self.distances[i]),
        )

    @property
    def particles(self) -> tuple[Particle, ...]:
        return tuple(self.particle(i) for i in range(self.n_particles))

    def replace(self, **changes) -> "ParticleSystem":
        return dataclass_replace(self, **changes)


@dataclass(frozen=True)
class RunConfig:
    """Knobs of one sampling run.

    ``n_init`` defaults to ten times ``n_particles`` so the first
    tolerance is already a reasonably selective quantile of the
    prior-predictive distances.  Seeds are mandatory: no wall-clock
    seeding anywhere.
    """

    n_particles: int
    seed: int
    n_init: int | None = None
    quantile: float = 0.5
    retention: float = 0.5
    stop_threshold: float = 0.05
    max_iterations: int = 30
    max_attempts_per_particle: int = 100_000
    grid_size: int = 512
    literal_kernel_density: bool = False
    use_measurement_errors: bool = False
    force_relabel_key: str | None = None
    n_workers: int = 1

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("n_particles must be at least 2")
        if self.n_init is None:
            object.__setattr__(self, "n_init", 10 * self.n_particles)
        if self.n_init < self.n_particles:
            raise ValueError("n_init must be at least n_particles")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must lie in (0, 1)")
        if not 0.0 <= self.retention <= 1.0:
            raise ValueError("retention must lie in [0, 1]")
        if not self.stop_threshold > 0.0:
            raise ValueError("stop_threshold must be strictly positive")
        if self.max_iterations < 1 or self.max_attempts_per_particle < 1:
            raise ValueError("iteration and attempt caps must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.grid_size < 16:
            raise ValueError("grid_size must be at least 16")
        if self.n_workers < 1:
            raise ValueError("n_workers must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration telemetry row."""

    iteration: int
    tolerance: float
    acceptance_rate: float
    ess: float
    chosen_relabel_key: str
    separation_score: float
    attempts: int
    degenerate_simulations: int
    zero_weight_candidates: int
    relabel_report: RelabelReport | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class RunResult:
    """Final population plus the full telemetry trail of a run."""

    system: ParticleSystem
    records: tuple[IterationRecord, ...]
    status: str  # "stopped" | "max_iterations" | "tolerance_plateau"
    duration_seconds: float


def particle_stream(seed: int, iteration: int, slot: int) -> np.random.Generator:
    """Dedicated counter-based random stream for one acceptance slot."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, iteration, slot))))


def next_tolerance(system: ParticleSystem, q: float) -> float:
    """The ceil(q*N)-th smallest accepted distance of the previous
    iteration (the same order-statistic convention that defines the first
    tolerance as the N-th smallest of the initial batch)."""
    n = system.n_particles
    rank = max(1, math.ceil(q * n))
    return float(np.sort(system.distances)[rank - 1])


def _simulate_dataset(
    weights: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    data: ObservedDataset,
    config: RunConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    if config.use_measurement_errors:
        return simulate_values_with_errors(weights, means, variances, data, rng)
    return simulate_values(weights, means, variances, data.n, rng)


def _relabel_if_possible(system, prior, config):
    """Relabel a system, skipping the vacuous single-component case."""
    if system.n_components < 2:
        report = RelabelReport(
            chosen_parameter="means",
            separation_score=0.0,
            per_parameter_scores={"weights": 0.0, "means": 0.0, "variances": 0.0},
        )
        return system, report
    return relabel(
        system,
        weights_fixed=prior.weights_fixed,
        variances_fixed=prior.variances_fixed,
        force_key=config.force_relabel_key,
    )


def initialize(prior: PriorSpec, data: ObservedDataset, config: RunConfig) -> tuple[
    ParticleSystem, IterationRecord
]:
    """Iteration 1: prior draws, simulation, and selection of the N best.

    Draws ``n_init`` parameter points, simulates a dataset for each, and
    keeps the ``n_particles`` with the smallest distances; the first
    tolerance is the largest kept distance, and all importance weights
    start uniform.
    """
    n_init, n_keep = config.n_init, config.n_particles
    k = prior.n_components
    weights = np.empty((n_init, k))
    means = np.empty((n_init, k))
    variances = np.empty((n_init, k))
    distances = np.empty(n_init)
    degenerate = 0
    for j in range(n_init):
        rng = particle_stream(config.seed, 1, j)
        w, m, v = sample_prior_batch(prior, 1, rng)
        weights[j], means[j], variances[j] = w[0], m[0], v[0]
        sim = _simulate_dataset(w[0], m[0], v[0], data, config, rng)
        try:
            distances[j] = abc_distance(data, sim)
        except DegenerateSampleError:
            distances[j] = np.inf
            degenerate += 1
    if degenerate > 0.5 * n_init:
        raise EngineAbort(
            "degenerate_simulations",
            f"{degenerate} of {n_init} prior simulations had zero spread",
            {"degenerate": degenerate, "n_init": n_init},
        )
    if np.sum(np.isfinite(distances)) < n_keep:
        raise EngineAbort(
            "too_few_valid_simulations",
            "fewer valid prior simulations than particles requested",
            {"valid": int(np.sum(np.isfinite(distances))), "n_particles": n_keep},
        )
    keep = np.argsort(distances, kind="stable")[:n_keep]
    system = ParticleSystem(
        weights=weights[keep],
        means=means[keep],
        variances=variances[keep],
        importance_weights=np.full(n_keep, 1.0 / n_keep),
        distances=distances[keep],
        iteration=1,
        tolerance=float(distances[keep].max()),
        scales=None,
    )
    system, report = _relabel_if_possible(system, prior, config)
    record = IterationRecord(
        iteration=1,
        tolerance=system.tolerance,
        acceptance_rate=n_keep / n_init,
        ess=system.effective_sample_size,
        chosen_relabel_key=report.chosen_parameter,
        separation_score=report.separation_score,
        attempts=n_init,
        degenerate_simulations=degenerate,
        zero_weight_candidates=0,
        relabel_report=report,
    )
    return system, record


def _fill_slot(
    slot: int,
    iteration: int,
    eps: float,
    previous: ParticleSystem,
    cum_weights: np.ndarray,
    scales: KernelScales,
    prior: PriorSpec,
    data: ObservedDataset,
    config: RunConfig,
):
    """Run one slot's propose/perturb/simulate/accept loop to acceptance."""
    rng = particle_stream(config.seed, iteration, slot)
    n_prev = previous.n_particles
    degenerate = 0
    for attempt in range(1, config.max_attempts_per_particle + 1):
        j = min(int(np.searchsorted(cum_weights, rng.random(), side="right")), n_prev - 1)
        jf = min(int(np.searchsorted(cum_weights, rng.random(), side="right")), n_prev - 1)
        if prior.weights_fixed or previous.n_components == 1:
            new_weights = previous.weights[jf]
        else:
            new_weights = resample_weights(
                previous.weights[jf], prior.dirichlet_concentration, config.retention, rng
            )
            if np.any(new_weights <= 0.0):
                continue  # numerically pathological proposal; reject
        new_means = perturb_mean(previous.means[j], scales.mean_scale_sq, rng)
        if prior.variances_fixed:
            new_variances = previous.variances[j]
        else:
            new_variances = perturb_variance(
                previous.variances[j], scales.variance_scale_sq, rng
            )
            if np.any(new_variances < VARIANCE_FLOOR):
                continue
        sim = _simulate_dataset(new_weights, new_means, new_variances, data, config, rng)
        try:
            distance = abc_distance(data, sim)
        except DegenerateSampleError:
            degenerate += 1
            continue
        if distance <= eps:
            candidate = MixtureParams(new_weights, new_means, new_variances)
            return candidate, distance, attempt, degenerate
    raise EngineAbort(
        "max_attempts_exceeded",
        f"slot {slot} found no acceptable candidate in "
        f"{config.max_attempts_per_particle} attempts at tolerance {eps:.6g}",
        {
            "slot": slot,
            "iteration": iteration,
            "tolerance": eps,
            "acceptance_rate_bound": 1.0 / config.max_attempts_per_particle,
        },
    )


def step(
    system: ParticleSystem,
    prior: PriorSpec,
    data: ObservedDataset,
    config: RunConfig,
) -> tuple[ParticleSystem, IterationRecord]:
    """Advance a relabeled system by one iteration.

    The tolerance shrinks to the configured quantile of the previous
    accepted distances; each of the N slots independently proposes from
    the previous weighted population until acceptance; importance weights
    are then recomputed, normalized, and the new system relabeled.
    """
    iteration = system.iteration + 1
    eps = next_tolerance(system, config.quantile)
    scales = compute_scales(system, config.retention, variances_fixed=prior.variances_fixed)
    cum = np.cumsum(system.importance_weights)
    n = config.n_particles

    def fill(slot: int):
        return _fill_slot(slot, iteration, eps, system, cum, scales, prior, data, config)

    if config.n_workers > 1:
        with ThreadPoolExecutor(max_workers=config.n_workers) as pool:
            results = list(pool.map(fill, range(n)))
    else:
        results = [fill(slot) for slot in range(n)]

    k = system.n_components
    weights = np.empty((n, k))
    means = np.empty((n, k))
    variances = np.empty((n, k))
    distances = np.empty(n)
    attempts = 0
    degenerate = 0
    for slot, (candidate, distance, slot_attempts, slot_degenerate) in enumerate(results):
        weights[slot] = candidate.weights
        means[slot] = candidate.means
        variances[slot] = candidate.variances
        distances[slot] = distance
        attempts += slot_attempts
        degenerate += slot_degenerate

    diagnostics = WeightDiagnostics()
    raw = importance_weights_batch(
        means,
        variances,
        system,
        scales,
        prior,
        diagnostics=diagnostics,
        literal_kernel_density=config.literal_kernel_density,
    )
    total = float(raw.sum())
    if total <= 0.0 or not np.isfinite(total):
        raise EngineAbort(
            "all_importance_weights_zero",
            "every accepted candidate received importance weight zero",
            {"iteration": iteration, "zero_denominators": diagnostics.zero_denominator},
        )
    new_system = ParticleSystem(
        weights=weights,
        means=means,
        variances=variances,
        importance_weights=raw / total,
        distances=distances,
        iteration=iteration,
        tolerance=eps,
        scales=scales,
    )
    new_system, report = _relabel_if_possible(new_system, prior, config)
    record = IterationRecord(
        iteration=iteration,
        tolerance=eps,
        acceptance_rate=n / attempts,
        ess=new_system.effective_sample_size,
        chosen_relabel_key=report.chosen_parameter,
        separation_score=report.separation_score,
        attempts=attempts,
        degenerate_simulations=degenerate,
        zero_weight_candidates=diagnostics.zero_denominator,
        relabel_report=report,
    )
    return new_system, record


def _free_marginals(system: ParticleSystem, prior: PriorSpec):
    """Yield (name, values) for every free scalar parameter marginal."""
    k = system.n_components
    if not prior.weights_fixed and k >= 2:
        for i in range(k):
            yield f"weight_{i + 1}", system.weights[:, i]
    for i in range(k):
        yield f"mean_{i + 1}", system.means[:, i]
    if not prior.variances_fixed:
        for i in range(k):
            yield f"var_{i + 1}", system.variances[:, i]


def should_stop(
    current: ParticleSystem,
    previous: ParticleSystem,
    threshold: float,
    prior: PriorSpec,
    grid_size: int = 512,
) -> bool:
    """True when every free marginal posterior moved less than
    ``threshold`` in Hellinger distance between consecutive iterations.

    Marginals are summarized by importance-weighted KDEs.
    """
    if current.n_components != previous.n_components:
        raise ValueError("systems must share the same number of components")
    cur = dict(_free_marginals(current, prior))
    prev = dict(_free_marginals(previous, prior))
    for name, values in cur.items():
        try:
            d = hellinger(
                kde_weighted(values, current.importance_weights, grid_size),
                kde_weighted(prev[name], previous.importance_weights, grid_size),
            )
        except DegenerateSampleError:
            return False
        if not d < threshold:
            return False
    return True


def run(
    prior: PriorSpec,
    data: ObservedDataset,
    config: RunConfig,
    sink=None,
) -> RunResult:
    """Full sampling loop: initialize, then step until a stop condition.

    ``sink``, when given, is called with each IterationRecord as it is
    produced.  Stops on the sequential-marginal rule, the iteration cap,
    or a tolerance plateau (the quantile no longer shrinks the tolerance,
    so further iterations cannot make progress).
    """
    t0 = perf_counter()
    records = []

    def emit(record: IterationRecord):
        records.append(record)
        if sink is not None:
            sink(record)

    system, record = initialize(prior, data, config)
    emit(record)
    status = "max_iterations"
    while system.iteration < config.max_iterations:
        if next_tolerance(system, config.quantile) == system.tolerance:
            status = "tolerance_plateau"
            break
        previous = system
        system, record = step(system, prior, data, config)
        emit(record)
        if should_stop(system, previous, config.stop_threshold, prior, config.grid_size):
            status = "stopped"
            break
    return RunResult(
        system=system,
        records=tuple(records),
        status=status,
        duration_seconds=perf_counter() - t0,
    )
