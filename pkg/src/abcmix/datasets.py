"""Bundled and generated benchmark datasets.

The galaxy file ships with the package: recessional velocities of 82
galaxies (in 10^3 km/s) from the classical Corona Borealis dataset, the
same values distributed as ``galaxies`` in R's MASS package.  The original
survey's per-velocity measurement errors are not reproduced here; the
``error`` column is a synthetic stand-in growing linearly with velocity
(0.1 + 0.015 * value, i.e. roughly 240-610 km/s), intended to exercise the
error-aware forward model with plausible magnitudes.

The simulated datasets are seeded generators for the standard
mixture-recovery benchmarks: a balanced two-component mixture at +/-20, a
three-component variant with a small central group, and a 500-point
bimodal sample with known unequal weights.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .mixture import ObservedDataset

TWO_COMPONENT_SEED = 20250801
THREE_COMPONENT_SEED = 20250802
BIMODAL_SEED = 20250803


def galaxy_dataset(grid_size: int = 512) -> ObservedDataset:
    """The bundled 82-galaxy velocity dataset, with its error column."""
    path = resources.files("abcmix.data").joinpath("galaxy.csv")
    with resources.as_file(path) as p:
        from .io import ingest  # local import: io depends on this module

        return ingest(p, grid_size=grid_size)


def two_component_dataset(seed: int = TWO_COMPONENT_SEED, grid_size: int = 512) -> ObservedDataset:
    """40 observations: 20 from Normal(-20, 1) and 20 from Normal(20, 1)."""
    rng = np.random.default_rng(seed)
    values = np.concatenate([rng.normal(-20.0, 1.0, 20), rng.normal(20.0, 1.0, 20)])
    return ObservedDataset(values=values, grid_size=grid_size)


def three_component_dataset(
    seed: int = THREE_COMPONENT_SEED, grid_size: int = 512
) -> ObservedDataset:
    """The two-component data plus 5 standard-Normal observations (n=45)."""
    rng = np.random.default_rng(seed)
    values = np.concatenate(
        [rng.normal(-20.0, 1.0, 20), rng.normal(20.0, 1.0, 20), rng.normal(0.0, 1.0, 5)]
    )
    return ObservedDataset(values=values, grid_size=grid_size)


def bimodal_dataset(
    seed: int = BIMODAL_SEED, n: int = 500, grid_size: int = 512
) -> ObservedDataset:
    """n draws from 0.7*Normal(0,1) + 0.3*Normal(2.5,1), weights known."""
    rng = np.random.default_rng(seed)
    component = rng.random(n) < 0.7
    values = np.where(component, rng.normal(0.0, 1.0, n), rng.normal(2.5, 1.0, n))
    return ObservedDataset(values=values, grid_size=grid_size)
