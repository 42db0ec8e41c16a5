"""Perturbation kernels for the sequential sampler and importance weights.

Means are jittered with a Gaussian kernel, variances with a Normal kernel
truncated to the positive half-line (sampled by inverse CDF), and mixture
weights with a Dirichlet-preserving resampling move.  Kernel variances are
twice the weighted sample variance of the previous particle population.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtr, ndtri

from .exceptions import DegenerateSystemError
from .mixture import MixtureParams, PriorSpec, prior_log_density_batch

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class KernelScales:
    """Squared kernel scales per component, plus the weight-retention knob.

    ``variance_scale_sq`` is None when the variances are fixed (no kernel
    is applied to them).  ``resampling_retention`` is the p of the weight
    resampling move: 1 copies the previous weights, 0 draws fresh from the
    Dirichlet prior.
    """

    mean_scale_sq: np.ndarray
    variance_scale_sq: np.ndarray | None
    resampling_retention: float

    def __post_init__(self):
        mean_sq = np.asarray(self.mean_scale_sq, dtype=float)
        if np.any(mean_sq <= 0.0):
            raise ValueError("mean kernel scales must be strictly positive")
        object.__setattr__(self, "mean_scale_sq", mean_sq)
        if self.variance_scale_sq is not None:
            var_sq = np.asarray(self.variance_scale_sq, dtype=float)
            if np.any(var_sq <= 0.0):
                raise ValueError("variance kernel scales must be strictly positive")
            object.__setattr__(self, "variance_scale_sq", var_sq)
        if not 0.0 <= self.resampling_retention <= 1.0:
            raise ValueError("resampling_retention must lie in [0, 1]")


def weighted_variance(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted sample variance with the reliability-weights correction.

    ``sum(w*(x - xbar)^2) / (1 - sum(w^2))`` with normalized weights; for
    uniform weights this reduces to the usual n-1 denominator.  Computed
    per column when ``values`` is 2-D.
    """
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    values = np.asarray(values, dtype=float)
    xbar = w @ values if values.ndim > 1 else float(np.sum(w * values))
    correction = 1.0 - float(np.sum(w**2))
    if correction <= 0.0:
        raise DegenerateSystemError("all weight mass on a single particle")
    return (w @ (values - xbar) ** 2) / correction


def compute_scales(system, retention: float, variances_fixed: bool = False) -> KernelScales:
    """Kernel scales from a particle system: twice the weighted sample
    variance of each free parameter slot.

    Raises
    ------
    DegenerateSystemError
        If some free slot has zero weighted variance (all particles
        identical there), leaving the kernel nothing to move.
    """
    if system.n_particles < 2:
        raise DegenerateSystemError("need at least 2 particles to compute kernel scales")
    w = system.importance_weights
    mean_sq = 2.0 * weighted_variance(system.means, w)
    if np.any(mean_sq <= 0.0):
        raise DegenerateSystemError("zero weighted variance in a mean slot")
    if variances_fixed:
        var_sq = None
    else:
        var_sq = 2.0 * weighted_variance(system.variances, w)
        if np.any(var_sq <= 0.0):
            raise DegenerateSystemError("zero weighted variance in a variance slot")
    return KernelScales(mean_sq, var_sq, retention)


def perturb_mean(value, scale_sq, rng: np.random.Generator):
    """Gaussian jitter: Normal(value, scale_sq), elementwise."""
    return rng.normal(value, np.sqrt(scale_sq))


def perturb_variance(value, scale_sq, rng: np.random.Generator):
    """Normal(value, scale_sq) truncated to (0, inf), by inverse CDF.

    The uniform draw is mapped through the Normal quantile function
    restricted to the retained tail, so no rejection loop is needed even
    under heavy truncation.
    """
    scalar = np.ndim(value) == 0 and np.ndim(scale_sq) == 0
    value = np.asarray(value, dtype=float)
    scale = np.sqrt(np.asarray(scale_sq, dtype=float))
    lo = ndtr(-value / scale)
    u = rng.uniform(lo, 1.0, size=np.broadcast(value, scale).shape)
    out = value + scale * ndtri(u)
    # inverse CDF can land on the boundary when u rounds to Phi(-value/scale)
    out = np.maximum(out, np.finfo(float).tiny)
    return float(out) if scalar else out


def truncated_normal_log_density(x, center, scale_sq, literal: bool = False):
    """Log density of Normal(center, scale_sq) truncated to (0, inf) at x.

    With ``literal=True`` the truncation normalizer is dropped, i.e. the
    plain Gaussian density is returned (a documented strict-reproduction
    mode; the truncated form is the density actually proposed from).
    """
    x = np.asarray(x, dtype=float)
    scale = np.sqrt(scale_sq)
    logpdf = -LOG_SQRT_2PI - np.log(scale) - 0.5 * ((x - center) / scale) ** 2
    if literal:
        return logpdf
    return logpdf - log_ndtr(center / scale)


def resample_weights(previous, delta, p: float, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet-preserving jitter of a simplex vector.

    Scales the previous weights by a Gamma(sum(delta), 1) draw to recover
    independent Gamma coordinates, thins each with an independent
    Beta(p*delta_i, (1-p)*delta_i) factor, adds an independent
    Gamma((1-p)*delta_i, 1) innovation, and renormalizes.  If the input is
    Dirichlet(delta) distributed, so is the output.  ``p=1`` returns the
    input exactly; ``p=0`` ignores it and draws fresh from Dirichlet(delta)
    (the degenerate Beta/Gamma parameters are taken as point masses at
    their continuous limits).

    Accepts a single simplex vector (K,) or a batch (m, K), resampled
    row-wise.
    """
    previous = np.asarray(previous, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if not 0.0 <= p <= 1.0:
        raise ValueError("retention p must lie in [0, 1]")
    if p == 1.0:
        return previous.copy()
    batch = np.atleast_2d(previous)
    if p == 0.0:
        out = rng.dirichlet(delta, size=batch.shape[0])
    else:
        z = rng.gamma(float(delta.sum()), 1.0, size=(batch.shape[0], 1))
        xi = z * batch
        b = rng.beta(p * delta, (1.0 - p) * delta, size=batch.shape)
        eta = rng.gamma((1.0 - p) * delta, 1.0, size=batch.shape)
        xi_star = xi * b + eta
        out = xi_star / xi_star.sum(axis=1, keepdims=True)
    return out[0] if previous.ndim == 1 else out


class WeightDiagnostics:
    """Counts numerically degenerate importance-weight evaluations."""

    def __init__(self):
        self.zero_denominator = 0


def importance_weight(
    candidate: MixtureParams,
    previous_system,
    scales: KernelScales,
    prior: PriorSpec,
    diagnostics: WeightDiagnostics | None = None,
    literal_kernel_density: bool = False,
) -> float:
    """Importance weight of one accepted candidate.

    Prior density of the candidate (free means and variances only)
    divided by the mixture of kernel densities centered at the previous
    particles, weighted by their importance weights.  Evaluated in log
    space; a denominator that underflows to zero yields weight 0 and a
    diagnostic count.
    """
    w = importance_weights_batch(
        candidate.means[None, :],
        candidate.variances[None, :],
        previous_system,
        scales,
        prior,
        diagnostics=diagnostics,
        literal_kernel_density=literal_kernel_density,
    )
    return float(w[0])


def importance_weights_batch(
    cand_means: np.ndarray,
    cand_variances: np.ndarray,
    previous_system,
    scales: KernelScales,
    prior: PriorSpec,
    diagnostics: WeightDiagnostics | None = None,
    literal_kernel_density: bool = False,
) -> np.ndarray:
    """Vectorized importance weights for (m, K) candidate arrays."""
    log_num = prior_log_density_batch(prior, cand_means, cand_variances)
    # (m, N, K) log kernel densities, summed over components
    tau_mu = scales.mean_scale_sq
    diff = cand_means[:, None, :] - previous_system.means[None, :, :]
    log_kernel = np.sum(
        -LOG_SQRT_2PI - 0.5 * np.log(tau_mu) - 0.5 * diff**2 / tau_mu, axis=2
    )
    if scales.variance_scale_sq is not None:
        log_kernel += np.sum(
            truncated_normal_log_density(
                cand_variances[:, None, :],
                previous_system.variances[None, :, :],
                scales.variance_scale_sq,
                literal=literal_kernel_density,
            ),
            axis=2,
        )
    prev_w = previous_system.importance_weights
    prev_w = prev_w / prev_w.sum()
    with np.errstate(divide="ignore"):
        log_den = logsumexp(log_kernel, b=prev_w[None, :], axis=1)
    out = np.zeros(cand_means.shape[0])
    finite = np.isfinite(log_den)
    out[finite] = np.exp(log_num[finite] - log_den[finite])
    if diagnostics is not None:
        diagnostics.zero_denominator += int(np.sum(~finite))
    return out
