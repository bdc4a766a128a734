"""Thinnings, Palm insertion and the Mecke / Renyi / fullness harnesses."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial import cKDTree

from . import hyperbolic as hyp
from .harness import (
    Z_THRESHOLD,
    TestReport,
    binomial_se,
    decision,
    mean_se,
    z_score,
)
from .measure import (
    BoundaryHeights,
    Configuration,
    EuclideanBox,
    HyperbolicDisk,
    IntensityMeasure,
    SeedStream,
    SpaceModel,
    count_in,
    mass,
    sample_points,
    sample_poisson,
)


class CensoredBoundaryError(ValueError):
    """The window does not contain the dependence range of the query."""


@dataclass(frozen=True)
class RIsolated:
    """Keep the points at distance ``>= r`` from every other point."""

    r: float
    uses_external_randomness = False

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be nonnegative")

    @property
    def dependence_range(self) -> float:
        return self.r


@dataclass(frozen=True)
class IndependentMark:
    """Keep each point independently with probability ``p``.

    This thins the i.i.d.-marked process, not the points alone: it is not an
    equivariant factor of the configuration.
    """

    p: float
    uses_external_randomness = True
    dependence_range = 0.0
    caveat = (
        "independent marking uses coin randomness outside the configuration; "
        "it thins the marked process and is not a thinning of the points alone"
    )

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")


ThinningRule = Union[RIsolated, IndependentMark]


def _seed_generator(seed) -> np.random.Generator:
    if isinstance(seed, SeedStream):
        return seed.generator()
    if isinstance(seed, np.random.Generator):
        return seed
    return SeedStream(int(seed)).generator()


def isolated_mask(points, kind: str, r: float) -> np.ndarray:
    """``True`` where a point has no other point at distance ``< r``."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    keep = np.ones(n, dtype=bool)
    if n < 2 or r <= 0:
        return keep
    if kind == "euclidean":
        pairs = cKDTree(pts).query_pairs(r, output_type="ndarray")
        if len(pairs):
            d = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
            close = pairs[d < r]
            keep[close.ravel()] = False
        return keep
    if kind == "hyperbolic":
        z = hyp.as_complex(pts)
        d = hyp.hyperbolic_distance(z[:, None], z[None, :])
        np.fill_diagonal(d, np.inf)
        return ~np.any(d < r, axis=1)
    raise TypeError(f"r-isolation needs a metric; space {kind!r} has none")


def marks(mark_seed, n: int) -> np.ndarray:
    """Uniform marks for point indices ``0..n-1``; index ``i`` always gets the
    ``i``-th draw of the mark stream."""
    return _seed_generator(mark_seed).random(n)


def retained_mask(rule: ThinningRule, config: Configuration, mark_seed=None) -> np.ndarray:
    """Membership mask of ``rule`` applied to the whole configuration (no boundary guard)."""
    if isinstance(rule, RIsolated):
        return isolated_mask(config.points, config.window.kind, rule.r)
    if isinstance(rule, IndependentMark):
        if mark_seed is None:
            raise ValueError("IndependentMark needs a mark seed")
        return marks(mark_seed, len(config)) < rule.p
    raise TypeError(f"unknown thinning rule {rule!r}")


def apply_thinning(rule: ThinningRule, config: Configuration, core_window: SpaceModel = None, mark_seed=None) -> Configuration:
    """Apply ``rule`` and report the retained points lying in ``core_window``.

    For ``RIsolated(r)`` the configuration's window must contain the
    ``r``-enlargement of the core window; by default the core is the window
    eroded by ``r``.
    """
    window = config.window
    if isinstance(rule, RIsolated) and isinstance(window, BoundaryHeights):
        raise TypeError("r-isolation is undefined on the boundary-heights space")
    reach = rule.dependence_range
    if core_window is None:
        try:
            core_window = window.eroded(reach) if reach > 0 else window
        except ValueError as exc:
            raise CensoredBoundaryError(str(exc)) from None
    if reach > 0 and not window.contains_region(core_window.enlarged(reach)):
        raise CensoredBoundaryError(
            f"censored boundary: window does not contain the {reach}-enlargement of the core window"
        )
    if not window.contains_region(core_window):
        raise CensoredBoundaryError("core window escapes the configuration window")
    keep = retained_mask(rule, config, mark_seed)
    if len(config):
        keep &= core_window.contains(config.points)
    return Configuration(config.points[keep], core_window, check=False)


def palm_insert(config: Configuration, x) -> Configuration:
    """``config`` with ``x`` adjoined (as the last point unless already present)."""
    x = np.asarray(x, dtype=float).reshape(1, config.window.dim)
    if not config.window.contains(x)[0]:
        raise ValueError("inserted point lies outside the window")
    if len(config) and np.any(np.all(config.points == x, axis=1)):
        return config
    return Configuration(np.vstack([config.points, x]), config.window, check=False)


def _contains_ball(window: SpaceModel, x, r: float) -> bool:
    x = np.asarray(x, dtype=float).ravel()
    if isinstance(window, EuclideanBox):
        return bool(np.all(x - r >= window.lower) and np.all(x + r <= window.upper))
    if isinstance(window, HyperbolicDisk):
        rho = float(hyp.distance_from_origin(hyp.as_complex(x)))
        return rho + r <= window.radius and (window.inner == 0 or rho - r >= window.inner)
    return r == 0


# --------------------------------------------------------------------------
# Mecke test functions


@dataclass(frozen=True)
class MeckeFunction:
    """Test functions ``f(x, omega)`` for the Mecke harness.

    ``indicator``:   ``1[x in A]``
    ``indicator-k``: ``1[x in A] 1[|omega cap A| = k]``
    ``isolated``:    ``1[x in A] 1[x in theta_r(omega)]``
    """

    name: str
    region: SpaceModel
    k: int = 0
    r: float = 0.0

    def __post_init__(self):
        if self.name not in ("indicator", "indicator-k", "isolated"):
            raise ValueError(f"unknown test function {self.name!r}")

    def check_window(self, window: SpaceModel) -> None:
        if not window.contains_region(self.region):
            raise CensoredBoundaryError("test region escapes the window")
        if self.name == "isolated" and not window.contains_region(self.region.enlarged(self.r)):
            raise CensoredBoundaryError(
                f"censored boundary: window must contain the {self.r}-enlargement of the test region"
            )

    def values(self, config: Configuration) -> np.ndarray:
        if len(config) == 0:
            return np.zeros(0)
        in_a = self.region.contains(config.points)
        if self.name == "indicator":
            return in_a.astype(float)
        if self.name == "indicator-k":
            return (in_a & (in_a.sum() == self.k)).astype(float)
        return (in_a & isolated_mask(config.points, config.window.kind, self.r)).astype(float)


def mecke_two_sided(measure: IntensityMeasure, f: MeckeFunction, n: int = 10_000, seed=0) -> TestReport:
    """Estimate both sides of the Mecke equation by independent Monte Carlo.

    LHS ``E sum_{x in Pi} f(x, Pi)`` from direct samples; RHS
    ``int E f(x, Pi + x) dm(x)`` as ``m(A) * f(X, Pi + X)`` with ``X`` drawn
    from the normalised measure on the test region ``A`` (every test function
    vanishes for ``x`` outside ``A``).  The two sides use independent seeds.
    """
    seed = seed if isinstance(seed, SeedStream) else SeedStream(int(seed))
    f.check_window(measure.space)
    on_region = measure.restricted(f.region)
    total = mass(on_region)
    lhs = np.empty(n)
    rhs = np.empty(n)
    for i in range(n):
        lhs[i] = f.values(sample_poisson(measure, seed.child(0, i))).sum()
        rng = seed.child(1, i).generator()
        config = sample_poisson(measure, rng)
        x = sample_points(on_region, 1, rng)[0]
        inserted = palm_insert(config, x)
        rhs[i] = total * f.values(inserted)[-1]
    lhs_mean, lhs_se = mean_se(lhs)
    rhs_mean, rhs_se = mean_se(rhs)
    se = math.hypot(lhs_se, rhs_se)
    z = z_score(lhs_mean - rhs_mean, se)
    return TestReport(
        harness="mecke",
        params={"function": f.name, "k": f.k, "r": f.r, "window": measure.space.describe(),
                "region": f.region.describe(), "scale": measure.scale, "space": measure.space.kind},
        estimate={"lhs": lhs_mean, "rhs": rhs_mean},
        se={"lhs": lhs_se, "rhs": rhs_se, "pooled": se},
        z=z,
        n=n,
        seed=str(seed),
        decision=decision(abs(z) < Z_THRESHOLD),
    )


def renyi_recurrence(measure: IntensityMeasure, region: SpaceModel, k_max: int = 8, n: int = 10_000, seed=0,
                     min_bin: int = 5) -> TestReport:
    """Check ``k P[N = k] = m(A) P[N = k - 1]`` for ``k = 1..k_max``.

    Each bin uses the per-sample variable ``k 1[N=k] - m(A) 1[N=k-1]``, whose
    sample mean and standard error give the z-score directly.  Bins where
    fewer than ``min_bin`` samples land in ``{k-1, k}`` are excluded and flagged.
    """
    seed = seed if isinstance(seed, SeedStream) else SeedStream(int(seed))
    m_a = mass(measure.restricted(region))
    counts = np.array([count_in(sample_poisson(measure, seed.child(i)), region) for i in range(n)])
    zs, diffs, ses, excluded = {}, {}, {}, []
    for k in range(1, k_max + 1):
        hit_k, hit_prev = counts == k, counts == k - 1
        if hit_k.sum() + hit_prev.sum() < min_bin:
            excluded.append(k)
            continue
        y = k * hit_k - m_a * hit_prev
        d, se = mean_se(y)
        diffs[k], ses[k], zs[k] = d, se, z_score(d, se)
    ok = all(abs(z) < Z_THRESHOLD for z in zs.values())
    notes = [f"{len(zs)} simultaneous 3-sigma tests; Bonferroni-style family error ~ {len(zs) * 0.0027:.3f}"]
    if excluded:
        notes.append(f"bins excluded for too few samples: {excluded}")
    return TestReport(
        harness="renyi",
        params={"region": region.describe(), "mass": m_a, "k_max": k_max, "space": measure.space.kind},
        estimate=diffs,
        se=ses,
        z=zs,
        n=n,
        seed=str(seed),
        decision=decision(ok),
        notes=notes,
        extra={"empirical_pmf": np.bincount(counts, minlength=k_max + 1)[: k_max + 1] / n, "excluded": excluded},
    )


def _inclusion_trials(rule: ThinningRule, measure: IntensityMeasure, points, seed: SeedStream) -> np.ndarray:
    hits = np.empty(len(points), dtype=bool)
    for i, x in enumerate(points):
        stream = seed.child(i)
        config = sample_poisson(measure, stream.child(0))
        inserted = palm_insert(config, x)
        mark_seed = stream.child(1) if rule.uses_external_randomness else None
        hits[i] = retained_mask(rule, inserted, mark_seed)[-1]
    return hits


def _check_reach(rule: ThinningRule, window: SpaceModel, x) -> None:
    if isinstance(rule, RIsolated) and not _contains_ball(window, x, rule.r):
        raise CensoredBoundaryError(f"censored boundary: window does not contain B(x, {rule.r})")


def palm_inclusion_probability(rule: ThinningRule, measure: IntensityMeasure, x, n: int = 10_000, seed=0,
                               expected: float = None) -> TestReport:
    """Monte Carlo estimate of ``P[x in theta(Pi + x)]``."""
    seed = seed if isinstance(seed, SeedStream) else SeedStream(int(seed))
    x = np.asarray(x, dtype=float).ravel()
    _check_reach(rule, measure.space, x)
    hits = _inclusion_trials(rule, measure, np.tile(x, (n, 1)), seed)
    p_hat = float(hits.mean())
    se = binomial_se(p_hat, n)
    z = None if expected is None else z_score(p_hat - expected, se)
    notes = [rule.caveat] if rule.uses_external_randomness else []
    return TestReport(
        harness="palm-inclusion",
        params={"rule": type(rule).__name__, **_rule_params(rule), "x": x.tolist(),
                "window": measure.space.describe(), "scale": measure.scale, "expected": expected},
        estimate=p_hat,
        se=se,
        z=z,
        n=n,
        seed=str(seed),
        decision=decision(z is None or abs(z) < Z_THRESHOLD),
        notes=notes,
    )


def _rule_params(rule: ThinningRule) -> dict:
    return {"r": rule.r} if isinstance(rule, RIsolated) else {"p": rule.p}


def classify_fullness(p_hat: float, se: float) -> str:
    if abs(p_hat - 1.0) <= Z_THRESHOLD * se:
        return "empirically-full"
    if abs(p_hat) <= Z_THRESHOLD * se:
        return "empirically-empty"
    return "nontrivial"


def fullness_verdict(rule: ThinningRule, measure: IntensityMeasure, n: int = 10_000, seed=0,
                     expect: str = None) -> TestReport:
    """Classify ``rule`` by the Palm inclusion probability averaged over the
    core window (the window eroded by the rule's dependence range)."""
    seed = seed if isinstance(seed, SeedStream) else SeedStream(int(seed))
    window = measure.space
    reach = rule.dependence_range
    try:
        core = window.eroded(reach) if reach > 0 else window
    except ValueError as exc:
        raise CensoredBoundaryError(str(exc)) from None
    xs = sample_points(measure.restricted(core), n, seed.child(0))
    hits = _inclusion_trials(rule, measure, xs, seed.child(1))
    p_hat = float(hits.mean())
    se = binomial_se(p_hat, n)
    verdict = classify_fullness(p_hat, se)
    notes = [rule.caveat] if rule.uses_external_randomness else []
    return TestReport(
        harness="fullness",
        params={"rule": type(rule).__name__, **_rule_params(rule), "window": window.describe(),
                "scale": measure.scale, "expect": expect},
        estimate=p_hat,
        se=se,
        n=n,
        seed=str(seed),
        decision=decision(expect is None or verdict == expect),
        notes=notes,
        extra={"verdict": verdict},
    )
