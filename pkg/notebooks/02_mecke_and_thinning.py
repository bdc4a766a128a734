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
# # Mecke equation, Palm insertion and thinnings
#
# The Mecke equation characterises Poisson processes:
#
#     E sum_{x in Pi} f(x, Pi) = int E f(x, Pi + x) dm(x)
#
# The harness estimates both sides with independent seeds and reports a
# z-score against the pooled standard error.

# %%
import math

from idealvoronoi.measure import EuclideanBox, HyperbolicDisk, IntensityMeasure, SeedStream, sample_poisson
from idealvoronoi.process import (
    IndependentMark,
    MeckeFunction,
    RIsolated,
    apply_thinning,
    fullness_verdict,
    mecke_two_sided,
    palm_inclusion_probability,
    renyi_recurrence,
)

# %%
measure = IntensityMeasure(HyperbolicDisk(3.0), 0.5)
for f in (
    MeckeFunction("indicator", HyperbolicDisk(1.0)),
    MeckeFunction("indicator-k", HyperbolicDisk(1.0), k=1),
    MeckeFunction("isolated", HyperbolicDisk(2.0), r=0.5),
):
    rep = mecke_two_sided(measure, f, n=4000, seed=3)
    print(f"{f.name:12s} lhs={rep.estimate['lhs']:.4f} rhs={rep.estimate['rhs']:.4f} z={rep.z:+.2f} {rep.decision}")

# %% [markdown]
# With `f = 1[x in A] 1[|omega cap A| = k]` the identity becomes the
# recurrence `k P[N = k] = m(A) P[N = k - 1]`, checked bin by bin.

# %%
rep = renyi_recurrence(IntensityMeasure(EuclideanBox.from_sides(2, 2)), EuclideanBox.from_sides(2, 2), n=4000, seed=4)
print({k: round(z, 2) for k, z in rep.z.items()}, rep.decision)

# %% [markdown]
# ## The r-isolation thinning
#
# `RIsolated(r)` keeps points with no neighbour closer than `r`.  Near the
# window edge the rule would need points outside the window, so the library
# reports only a core window eroded by `r`.

# %%
line = IntensityMeasure(EuclideanBox((0.0,), (10.0,)), 1.0)
cfg = sample_poisson(line, SeedStream(5))
kept = apply_thinning(RIsolated(0.5), cfg)
print(f"{len(cfg)} points, {len(kept)} isolated points in {kept.window.describe()}")

# %% [markdown]
# The Palm inclusion probability of an added point `x` is the void
# probability of `(x - r, x + r)`, which is `e^{-2 lambda r}`.

# %%
rep = palm_inclusion_probability(RIsolated(0.5), line, [5.0], n=4000, seed=6, expected=math.exp(-1))
print(f"estimate {rep.estimate:.4f} +- {rep.se:.4f}, exact {math.exp(-1):.4f}")

# %% [markdown]
# ## Fullness
#
# A thinning is full when it keeps every point, empty when it keeps none.

# %%
for rule in (RIsolated(0.0), RIsolated(0.5), IndependentMark(0.0), IndependentMark(1.0)):
    rep = fullness_verdict(rule, line, n=2000, seed=7)
    print(f"{rule!r:28s} p={rep.estimate:.3f} -> {rep.extra['verdict']}")
