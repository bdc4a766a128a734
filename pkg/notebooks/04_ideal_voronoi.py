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
# # The ideal Poisson Voronoi tessellation
#
# Take a Poisson process of atoms `(xi, s)` on the boundary circle times the
# real line, with intensity `(dxi / 2 pi) e^s ds`.  Each atom gives the
# function `B_xi(y) + s`; the tessellation assigns every point to the atom
# of smallest value.  It is the low-intensity limit of ordinary Voronoi
# tessellations of hyperbolic Poisson samples.

# %%
import math
from pathlib import Path

import numpy as np

from idealvoronoi import hyperbolic as hyp
from idealvoronoi.ipvt import (
    act_on_ideal,
    agreement_fraction,
    ipvt_family,
    mixing_experiment,
    sample_ipvt,
    sample_pvt,
    unboundedness_experiment,
    winners_in_ball,
)
from idealvoronoi.measure import HyperbolicDisk, IntensityMeasure, SeedStream, sample_points
from idealvoronoi.render import render_disk
from idealvoronoi.tessellation import assign, grid

# %% [markdown]
# ## Exact sampling on a ball
#
# On `B(o, R)` every member lies within `R` of its height, so atoms above
# `s0 + 2R` can never win there.  Sampling stops at that height.

# %%
ic = sample_ipvt(3.0, SeedStream(7))
print(f"{len(ic)} atoms, s0 = {ic.s_min:.3f}, cutoff = {ic.cutoff:.3f}")
pts, ids = winners_in_ball(ic, 3.0, 0.05)
print(f"{len(np.unique(ids))} cells meet B(o, 3); the origin belongs to atom {ids[np.argmin(np.abs(pts[:, 0]) + np.abs(pts[:, 1]))]}")

# %%
pts, _, mask = grid(HyperbolicDisk(3.0), 0.01)
pts = pts[mask.ravel()]
Path("ideal_cells.svg").write_text(render_disk(assign(ipvt_family(ic), pts), h=0.01))
print("wrote ideal_cells.svg")

# %% [markdown]
# ## Isometries move atoms
#
# An isometry sends `(xi, s)` to `(g xi, s + B_xi(g^-1 o))`.  Winners follow
# the points: the cell holding `y` before is the cell holding `g y` after.

# %%
g = hyp.sample_isometry(1.0, axis=2.0, rotation=0.5)
moved = act_on_ideal(g, ic)
y = hyp.from_polar(np.full(5, 0.8), np.linspace(0, 5, 5))
before = ic.ids[assign(ipvt_family(ic), y).winner]
after = moved.ids[assign(ipvt_family(moved), hyp.apply_isometry(g, y)).winner]
print(before, after)

# %% [markdown]
# ## Convergence from finite intensity
#
# A sample of intensity `t dA` becomes a set of atoms via
# `x -> (direction of x, d(o, x) - r_t)` with `r_t = -log(pi t)`.  Winner
# agreement between the distance family and the coupled Busemann family
# approaches 1 as `t -> 0`.

# %%
rng = np.random.default_rng(0)
for t in (1e-1, 1e-2, 1e-3):
    fr = []
    for i in range(300):
        cfg = sample_pvt(t, 1.0, SeedStream(8, (i,)))
        fr.append(agreement_fraction(cfg, t, sample_points(IntensityMeasure(HyperbolicDisk(1.0)), 64, rng)))
    print(f"t={t:g}  r_t={-math.log(math.pi * t):.3f}  agreement={np.mean(fr):.5f}")

# %% [markdown]
# ## Mixing and unbounded cells
#
# Events depending on far-apart parts of the boundary decorrelate under long
# translations; and every cell near the origin stretches to the boundary.

# %%
rep = mixing_experiment(lengths=(0.0, 5.0, 20.0), n=3000, seed=9)
print("covariance by length:", np.round(rep.estimate, 4), "+-", np.round(rep.se, 4))

rep = unboundedness_experiment(n_draws=30, seed=10)
print(f"cells winning along their own ray: {rep.estimate:.0%} of draws, onset radius <= {rep.extra['max_onset']}")
