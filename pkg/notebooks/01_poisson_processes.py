# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Poisson processes on three spaces
#
# A Poisson point process with intensity measure `m` puts `Pois(m(A))` points
# in every region `A`, independently over disjoint regions.  The library
# supports three spaces: Euclidean boxes, hyperbolic disks in the Poincare
# model, and the boundary-heights space (angle, height) with intensity
# `(dtheta / 2 pi) e^s ds`.

# %%
import math

import numpy as np

from idealvoronoi.harness import poisson_chisquare
from idealvoronoi.measure import (
    BoundaryHeights,
    EuclideanBox,
    HyperbolicDisk,
    IntensityMeasure,
    SeedStream,
    count_in,
    poisson_pmf,
    sample_poisson,
)

# %% [markdown]
# ## Masses
#
# The hyperbolic disk of radius `R` has area `2 pi (cosh R - 1)`, which grows
# like `e^R`.  The heights space below `s_max` has mass `e^{s_max}`.

# %%
for space in (EuclideanBox.from_sides(2, 2), HyperbolicDisk(3.0), BoundaryHeights(math.log(4))):
    print(f"{space.describe():45s} mass = {IntensityMeasure(space).mass():.4f}")

# %% [markdown]
# ## Sampling and the count law
#
# Every sample is keyed by a `SeedStream(root, path)`, so replica `i` of an
# experiment is reproducible on its own.

# %%
measure = IntensityMeasure(HyperbolicDisk(3.0), 4.0 / (2 * math.pi * (math.cosh(2.0) - 1)))
region = HyperbolicDisk(2.0)
seed = SeedStream(2024)
counts = np.array([count_in(sample_poisson(measure, seed.child(i)), region) for i in range(5000)])

k = np.arange(10)
table = np.column_stack([k, np.bincount(counts, minlength=10)[:10] / len(counts), poisson_pmf(k, 4.0)])
print("k   empirical   Pois(4)")
for row in table:
    print(f"{int(row[0])}   {row[1]:.4f}      {row[2]:.4f}")

stat, p, dof = poisson_chisquare(counts, 4.0)
print(f"chi-square {stat:.2f} on {dof} dof, p = {p:.3f}")

# %% [markdown]
# ## Near the boundary
#
# Points of a hyperbolic sample crowd toward the unit circle, because area
# grows exponentially with radius.

# %%
cfg = sample_poisson(IntensityMeasure(HyperbolicDisk(4.0), 0.5), SeedStream(1))
radius = np.hypot(cfg.points[:, 0], cfg.points[:, 1])
print(f"{len(cfg)} points; median Euclidean radius {np.median(radius):.3f}")
print(f"hyperbolic radius quartiles {np.quantile(2 * np.arctanh(radius), [0.25, 0.5, 0.75]).round(2)}")
