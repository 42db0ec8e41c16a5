"""Deterministic component relabeling for a particle system.

A mixture likelihood is invariant under permutation of component indices,
so accepted particles carry their components in arbitrary order.  At the
end of each iteration the system is reordered by a single, automatically
chosen parameter set: the one whose (standardized) per-component
representative values are most separated.  Every particle's weight, mean,
and variance triples are then jointly permuted so that the chosen set is
ascending within each particle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .exceptions import DegenerateSystemError

# Tie-break precedence when two parameter sets achieve the same separation.
_KEY_ORDER = ("means", "variances", "weights")


@dataclass(frozen=True)
class RelabelReport:
    """Which parameter set ordered the system, and how separated each was.

    ``per_parameter_scores`` maps each candidate set to its maximum
    pairwise gap between standardized component representatives; excluded
    (fixed or spread-free) sets score 0.  ``separation_score`` is the
    chosen set's score, which equals the maximum unless the key was
    forced (``forced=True``, diagnostic runs only).
    """

    chosen_parameter: str
    separation_score: float
    per_parameter_scores: dict[str, float]
    forced: bool = False

    def __post_init__(self):
        if self.chosen_parameter not in _KEY_ORDER:
            raise ValueError(f"unknown parameter set {self.chosen_parameter!r}")
        if not self.forced and self.separation_score != max(self.per_parameter_scores.values()):
            raise ValueError("separation_score must equal the maximum per-parameter score")


def _separation_score(values: np.ndarray) -> float:
    """Max pairwise gap between component representatives of one set.

    Within each particle the set is sorted ascending; the pooled mean/sd
    over all N*K values standardizes through the Normal CDF; each
    component's representative is the mean of its standardized order
    statistic over particles.  Zero pooled spread means zero separation.
    """
    n, k = values.shape
    ordered = np.sort(values, axis=1)
    pooled_mean = float(values.mean())
    pooled_sd = float(values.std(ddof=1))
    if pooled_sd == 0.0:
        return 0.0
    representatives = ndtr((ordered - pooled_mean) / pooled_sd).mean(axis=0)
    gaps = np.abs(representatives[:, None] - representatives[None, :])
    return float(gaps.max())


def relabel(
    system,
    *,
    weights_fixed: bool = False,
    variances_fixed: bool = False,
    force_key: str | None = None,
):
    """Reorder every particle's components by the best-separated free set.

    Parameters
    ----------
    system : ParticleSystem
        System to reorder; K must be at least 2.
    weights_fixed, variances_fixed : bool
        Known parameter sets are never candidates for the sort key
        (means are always free in this model).
    force_key : str, optional
        Diagnostic override: sort by this set regardless of separation
        (used to demonstrate the failure mode of a badly chosen key).

    Returns
    -------
    (ParticleSystem, RelabelReport)
        A new system holding, per particle, the same multiset of
        (weight, mean, variance) triples in sorted order, with importance
        weights and distances untouched.
    """
    if system.n_particles == 0:
        raise ValueError("cannot relabel an empty system")
    if system.n_components < 2:
        raise ValueError("relabeling needs at least 2 components")

    sets = {"weights": system.weights, "means": system.means, "variances": system.variances}
    candidates = [name for name in _KEY_ORDER
                  if not (name == "weights" and weights_fixed)
                  and not (name == "variances" and variances_fixed)]
    scores = {name: (_separation_score(sets[name]) if name in candidates else 0.0)
              for name in _KEY_ORDER}
    if all(scores[name] == 0.0 for name in candidates):
        raise DegenerateSystemError("every candidate parameter set has zero pooled spread")

    forced = force_key is not None
    if forced:
        if force_key not in _KEY_ORDER:
            raise ValueError(f"unknown parameter set {force_key!r}")
        chosen = force_key
    else:
        chosen = max(candidates, key=lambda name: (scores[name], -_KEY_ORDER.index(name)))

    order = np.argsort(sets[chosen], axis=1, kind="stable")
    rows = np.arange(system.n_particles)[:, None]
    relabeled = system.replace(
        weights=system.weights[rows, order],
        means=system.means[rows, order],
        variances=system.variances[rows, order],
    )
    report = RelabelReport(
        chosen_parameter=chosen,
        separation_score=scores[chosen],
        per_parameter_scores=scores,
        forced=forced,
    )
    return relabeled, report
