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
# # Hyperbolic geometry and Voronoi cells
#
# Points live in the Poincare disk.  Isometries are `SU(1,1)` matrices
# `[[a, b], [conj(b), conj(a)]]` acting by Mobius maps.

# %%
import math
from pathlib import Path

import numpy as np

from idealvoronoi import hyperbolic as hyp
from idealvoronoi.measure import HyperbolicDisk, IntensityMeasure, SeedStream, sample_poisson
from idealvoronoi.render import render_disk
from idealvoronoi.tessellation import DistanceFamily, adjacency_probe, assign, grid

# %%
print("d(0, 0.5) =", hyp.hyperbolic_distance(0j, 0.5), " log 3 =", math.log(3))

g = hyp.sample_isometry(2.0, axis=0.3, rotation=1.0)
z, w = 0.2 + 0.1j, -0.4 + 0.3j
print("distance before", hyp.hyperbolic_distance(z, w))
print("distance after ", hyp.hyperbolic_distance(hyp.apply_isometry(g, z), hyp.apply_isometry(g, w)))

# %% [markdown]
# ## Busemann functions
#
# `B_xi(y)` is the limit of `d(y, gamma(T)) - T` along the ray toward the
# boundary point `xi`.  At `T = 15` the limit is already reached to about
# `1e-10` for points near the origin.

# %%
xi, y = 1.0, 0.3 - 0.2j
for T in (2.0, 5.0, 10.0, 15.0):
    approx = hyp.hyperbolic_distance(y, hyp.geodesic_ray(xi, T)) - T
    print(f"T={T:4.1f}  {approx:.12f}")
print(f"exact    {hyp.busemann(xi, y):.12f}")

# %% [markdown]
# Moving points by `g` changes Busemann values by a height cocycle:
# `B_xi(g^-1 y) = B_{g xi}(y) + B_xi(g^-1 o)`.

# %%
lhs = hyp.busemann(xi, hyp.apply_isometry(g.inverse(), y))
rhs = hyp.busemann(hyp.apply_boundary(g, xi), y) + hyp.height_cocycle(g, xi)
print(f"{lhs:.15f}\n{rhs:.15f}")

# %% [markdown]
# ## Voronoi cells of a hyperbolic Poisson sample

# %%
window = HyperbolicDisk(2.5)
sites = sample_poisson(IntensityMeasure(window, 1.0), SeedStream(11))
pts, _, mask = grid(window, 0.02)
pts = pts[mask.ravel()]
cells = assign(DistanceFamily(sites), pts)
pairs = adjacency_probe(DistanceFamily(sites), window, 0.02)
print(f"{len(sites)} sites, {len(pairs)} adjacent pairs, min margin {cells.margin.min():.2e}")

out = Path("voronoi_disk.svg")
out.write_text(render_disk(cells, h=0.02))
print("wrote", out)
