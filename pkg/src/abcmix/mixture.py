"""Domain types, priors, and forward simulation for 1-D Gaussian mixtures.

The model is a K-component Gaussian mixture on the real line: mixture
weights live on the simplex, each component has a mean and a strictly
positive variance.  Priors are Dirichlet on the weights, Normal on the
means, and Gamma on the precisions (so the variances are inverse-gamma
distributed).  Weights and/or variances may be declared known and fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .exceptions import ConfigurationError

# Variances below this are rejected outright: their densities are not
# representable in double precision.
VARIANCE_FLOOR = 1e-300

WEIGHT_SUM_TOL = 1e-12


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MixtureParams:
    """One candidate parameter point of a K-component Gaussian mixture.

    Parameters
    ----------
    weights : array_like, shape (K,)
        Mixture proportions; each in (0, 1] and summing to 1 within 1e-12.
        A weight of exactly 1 only occurs for K = 1.
    means : array_like, shape (K,)
        Component means, in data units.
    variances : array_like, shape (K,)
        Component variances, strictly positive.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_float_vector(self.weights, "weights"))
        object.__setattr__(self, "means", _as_float_vector(self.means, "means"))
        object.__setattr__(self, "variances", _as_float_vector(self.variances, "variances"))
        k = self.weights.size
        if self.means.size != k or self.variances.size != k:
            raise ValueError(
                f"component count mismatch: weights {k}, means {self.means.size}, "
                f"variances {self.variances.size}"
            )
        if np.any(self.weights <= 0.0) or np.any(self.weights > 1.0):
            raise ValueError("weights must lie in (0, 1]")
        if abs(float(self.weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}")
        if np.any(self.variances < VARIANCE_FLOOR):
            raise ValueError(f"variances must be >= {VARIANCE_FLOOR}")

    @property
    def n_components(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class PriorSpec:
    """Prior hyperparameters for a K-component Gaussian mixture.

    Weights are Dirichlet(``dirichlet_concentration``); each mean is
    Normal(``mean_prior_location``, ``mean_prior_variance``); each precision
    1/variance is Gamma(``precision_shape``, rate=``precision_rate``), i.e.
    the variance itself is inverse-gamma.  ``fixed_weights`` and
    ``fixed_variances``, when given, declare those parameter sets known:
    they are copied rather than sampled and contribute nothing to prior
    densities.

    Note the second argument of the Normal prior is a *variance*
    throughout this package, never a standard deviation or precision.
    """

    dirichlet_concentration: np.ndarray
    mean_prior_location: float
    mean_prior_variance: float
    precision_shape: float
    precision_rate: float
    fixed_weights: np.ndarray | None = None
    fixed_variances: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "dirichlet_concentration",
            _as_float_vector(self.dirichlet_concentration, "dirichlet_concentration"),
        )
        if np.any(self.dirichlet_concentration <= 0.0):
            raise ValueError("dirichlet_concentration must be strictly positive")
        for name in ("mean_prior_variance", "precision_shape", "precision_rate"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        k = self.n_components
        if self.fixed_weights is not None:
            fw = _as_float_vector(self.fixed_weights, "fixed_weights")
            if fw.size != k:
                raise ValueError("fixed_weights length must match K")
            if np.any(fw <= 0.0) or np.any(fw > 1.0) or abs(float(fw.sum()) - 1.0) > WEIGHT_SUM_TOL:
                raise ValueError("fixed_weights must lie on the simplex")
            object.__setattr__(self, "fixed_weights", fw)
        if self.fixed_variances is not None:
            fv = _as_float_vector(self.fixed_variances, "fixed_variances")
            if fv.size != k:
                raise ValueError("fixed_variances length must match K")
            if np.any(fv < VARIANCE_FLOOR):
                raise ValueError(f"fixed_variances must be >= {VARIANCE_FLOOR}")
            object.__setattr__(self, "fixed_variances", fv)

    @property
    def n_components(self) -> int:
        return self.dirichlet_concentration.size

    @property
    def weights_fixed(self) -> bool:
        return self.fixed_weights is not None

    @property
    def variances_fixed(self) -> bool:
        return self.fixed_variances is not None


@dataclass(frozen=True)
class ObservedDataset:
    """Observations to fit, with optional per-observation measurement errors.

    The density summary of ``values`` is computed once at construction and
    cached on ``summary`` so repeated distance evaluations reuse it.
    """

    values: np.ndarray
    measurement_errors: np.ndarray | None = None
    grid_size: int = 512
    summary: "DensitySummary" = field(init=False, repr=False)  # noqa: F821
    errors_by_rank: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_float_vector(self.values, "values"))
        if self.values.size < 2:
            raise ValueError("a dataset needs at least 2 observations")
        if self.measurement_errors is None:
            object.__setattr__(self, "errors_by_rank", None)
        else:
            errs = _as_float_vector(self.measurement_errors, "measurement_errors")
            if errs.size != self.values.size:
                raise ValueError("measurement_errors length must match values")
            if np.any(errs < 0.0):
                raise ValueError("measurement_errors must be nonnegative")
            object.__setattr__(self, "measurement_errors", errs)
            by_rank = errs[np.argsort(self.values, kind="stable")]
            by_rank.flags.writeable = False
            object.__setattr__(self, "errors_by_rank", by_rank)
        from .summaries import kde  # deferred to avoid an import cycle

        object.__setattr__(self, "summary", kde(self.values, self.grid_size))

    @property
    def n(self) -> int:
        return self.values.size


def normal_log_density(x, mean, variance):
    """Log density of Normal(mean, variance) at x (elementwise)."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (np.log(2.0 * np.pi * variance) + (x - mean) ** 2 / variance)


def inverse_gamma_log_density(x, shape, rate):
    """Log density at x of 1/G where G ~ Gamma(shape, rate).

    Change of variables u = 1/x applied to the Gamma density:
    ``shape*log(rate) - lgamma(shape) - (shape+1)*log(x) - rate/x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("inverse-gamma density requires strictly positive arguments")
    return shape * np.log(rate) - gammaln(shape) - (shape + 1.0) * np.log(x) - rate / x


def sample_prior(prior: PriorSpec, rng: np.random.Generator) -> MixtureParams:
    """Draw one parameter point from the prior.

    Fixed slots are copied verbatim; free weights are Dirichlet, free
    variances are reciprocals of Gamma draws, means are always Normal.
    """
    weights, means, variances = sample_prior_batch(prior, 1, rng)
    return MixtureParams(weights[0], means[0], variances[0])


def sample_prior_batch(
    prior: PriorSpec, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized prior sampling: three (size, K) arrays."""
    k = prior.n_components
    if prior.weights_fixed:
        weights = np.tile(prior.fixed_weights, (size, 1))
    else:
        weights = rng.dirichlet(prior.dirichlet_concentration, size=size)
    means = rng.normal(
        prior.mean_prior_location, np.sqrt(prior.mean_prior_variance), size=(size, k)
    )
    if prior.variances_fixed:
        variances = np.tile(prior.fixed_variances, (size, 1))
    else:
        variances = 1.0 / rng.gamma(prior.precision_shape, 1.0 / prior.precision_rate, size=(size, k))
    return weights, means, variances


def prior_log_density(prior: PriorSpec, params: MixtureParams) -> float:
    """Log prior density of the free means and variances of ``params``.

    This is the numerator of the sampler's importance weight: the product
    of Normal densities over the means and of induced inverse-gamma
    densities over free variances.  The Dirichlet factor for the weights
    is deliberately excluded -- the weight-resampling move preserves the
    Dirichlet marginal, so prior and proposal factors for the weights
    cancel.  Fixed slots contribute zero.
    """
    if params.n_components != prior.n_components:
        raise ValueError("params dimension does not match prior")
    return float(prior_log_density_batch(prior, params.means, params.variances))


def prior_log_density_batch(prior: PriorSpec, means, variances) -> np.ndarray:
    """Vectorized ``prior_log_density`` over the last axis of (rows of)
    means/variances arrays."""
    means = np.asarray(means, dtype=float)
    total = np.sum(
        normal_log_density(means, prior.mean_prior_location, prior.mean_prior_variance),
        axis=-1,
    )
    if not prior.variances_fixed:
        variances = np.asarray(variances, dtype=float)
        if np.any(variances <= 0.0):
            raise ValueError("variances must be strictly positive")
        total = total + np.sum(
            inverse_gamma_log_density(variances, prior.precision_shape, prior.precision_rate),
            axis=-1,
        )
    return total


def simulate(params: MixtureParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n values from the mixture: component index, then a Normal draw."""
    return simulate_values(params.weights, params.means, params.variances, n, rng)


def simulate_values(
    weights: np.ndarray, means: np.ndarray, variances: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    """``simulate`` on raw parameter arrays (the engine's hot path)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.searchsorted(np.cumsum(weights), rng.random(n), side="right")
    idx = np.minimum(idx, weights.size - 1)  # guard the u ~ 1, cumsum < 1 edge
    return rng.normal(means[idx], np.sqrt(variances[idx]))


def simulate_with_errors(
    params: MixtureParams, data: ObservedDataset, rng: np.random.Generator
) -> np.ndarray:
    """Simulate ``data.n`` values and add rank-matched measurement noise.

    The r-th ranked simulated value receives the measurement error of the
    r-th ranked observed value, then independent Normal(0, error^2) noise
    is added.  With all-zero errors the output equals the clean simulation.
    """
    return simulate_values_with_errors(
        params.weights, params.means, params.variances, data, rng
    )


def simulate_values_with_errors(
    weights: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    data: ObservedDataset,
    rng: np.random.Generator,
) -> np.ndarray:
    """``simulate_with_errors`` on raw parameter arrays."""
    if data.measurement_errors is None:
        raise ConfigurationError("dataset carries no measurement errors")
    n = data.n
    clean = simulate_values(weights, means, variances, n, rng)
    assigned = np.empty(n)
    assigned[np.argsort(clean, kind="stable")] = data.errors_by_rank
    return clean + rng.normal(0.0, 1.0, size=n) * assigned


def loglik_grid(
    data: ObservedDataset,
    weight: float,
    axis1: np.ndarray,
    axis2: np.ndarray,
) -> np.ndarray:
    """Log-likelihood surface of a two-component, unit-variance mixture.

    Entry (i, j) is the log likelihood of the data under
    ``weight * Normal(axis1[i], 1) + (1 - weight) * Normal(axis2[j], 1)``.
    Used to visualize the bimodal likelihood of the known-weights example.
    """
    axis1 = _as_float_vector(axis1, "axis1")
    axis2 = _as_float_vector(axis2, "axis2")
    y = data.values
    # (len(axis), n) component log densities, shared across the other axis
    logphi1 = normal_log_density(y[None, :], axis1[:, None], 1.0)
    logphi2 = normal_log_density(y[None, :], axis2[:, None], 1.0)
    a = np.log(weight) + logphi1[:, None, :]  # (n1, 1, n)
    b = np.log1p(-weight) + logphi2[None, :, :]  # (1, n2, n)
    hi = np.maximum(a, b)
    return np.sum(hi + np.log(np.exp(a - hi) + np.exp(b - hi)), axis=2)


def default_hyperparameters(values) -> dict[str, float]:
    """Data-driven fallback hyperparameters.

    Centers the mean prior on the sample mean with the sample variance as
    spread, and uses shape 2 / rate equal to the sample variance for the
    precision prior.  Callers are expected to override these in config
    when better information exists.
    """
    values = np.asarray(values, dtype=float)
    var = float(np.var(values, ddof=1))
    return {
        "mean_prior_location": float(np.mean(values)),
        "mean_prior_variance": var,
        "precision_shape": 2.0,
        "precision_rate": var,
    }
