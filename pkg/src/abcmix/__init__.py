"""Sequential likelihood-free inference for 1-D Gaussian mixture models.

The sampler proposes mixture parameters from a sequence of adaptively
tightening tolerances, comparing simulated datasets to the observations
through the Hellinger distance between kernel density summaries.  Mixture
weights move under a Dirichlet-preserving resampling kernel, and component
labels are aligned each iteration by a deterministic relabeling rule.
"""

from .engine import (
    IterationRecord,
    Particle,
    ParticleSystem,
    RunConfig,
    RunResult,
    initialize,
    next_tolerance,
    run,
    should_stop,
    step,
)
from .exceptions import (
    AbcmixError,
    ConfigurationError,
    DegenerateSampleError,
    DegenerateSystemError,
    EngineAbort,
    ParseError,
)
from .kernels import (
    KernelScales,
    compute_scales,
    importance_weight,
    perturb_mean,
    perturb_variance,
    resample_weights,
)
from .mixture import (
    MixtureParams,
    ObservedDataset,
    PriorSpec,
    default_hyperparameters,
    loglik_grid,
    prior_log_density,
    sample_prior,
    simulate,
    simulate_with_errors,
)
from .relabel import RelabelReport, relabel
from .summaries import DensitySummary, abc_distance, hellinger, kde, kde_weighted

__version__ = "0.1.0"

__all__ = [
    "AbcmixError",
    "ConfigurationError",
    "DegenerateSampleError",
    "DegenerateSystemError",
    "DensitySummary",
    "EngineAbort",
    "IterationRecord",
    "KernelScales",
    "MixtureParams",
    "ObservedDataset",
    "ParseError",
    "Particle",
    "ParticleSystem",
    "PriorSpec",
    "RelabelReport",
    "RunConfig",
    "RunResult",
    "abc_distance",
    "compute_scales",
    "default_hyperparameters",
    "hellinger",
    "importance_weight",
    "initialize",
    "kde",
    "kde_weighted",
    "loglik_grid",
    "next_tolerance",
    "perturb_mean",
    "perturb_variance",
    "prior_log_density",
    "relabel",
    "resample_weights",
    "run",
    "sample_prior",
    "should_stop",
    "simulate",
    "simulate_with_errors",
    "step",
]
