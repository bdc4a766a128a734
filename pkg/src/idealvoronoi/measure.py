"""Model spaces, intensity measures and exact Poisson sampling on bounded windows.

Three model spaces are supported:

* :class:`EuclideanBox` -- an axis-aligned box in R^n with Lebesgue measure.
* :class:`HyperbolicDisk` -- a hyperbolic ball (or annulus) centred at the origin
  of the Poincare disk, with area element ``sinh(rho) drho dtheta``.
* :class:`BoundaryHeights` -- a region of ``S^1 x R`` (boundary angle, additive
  height ``s``) carrying ``(dtheta / 2 pi) * e^s ds``.

Points are always stored as a float array of shape ``(N, dim)``: Cartesian
coordinates for boxes, Poincare coordinates ``(x, y)`` for the disk and
``(xi, s)`` pairs for boundary heights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import gammaln

TWO_PI = 2.0 * math.pi


class UnboundedWindowError(ValueError):
    """Raised when a window has infinite mass and cannot be sampled."""


@dataclass(frozen=True)
class SeedStream:
    """A root seed plus a path of replica indices.

    Distinct paths give independent streams (``numpy.random.SeedSequence``
    spawn keys); the same ``(root, path)`` reproduces the same bits.
    """

    root: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.root < 0 or self.root >= 2**64:
            raise ValueError("root seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))
        if any(i < 0 for i in self.path):
            raise ValueError("seed path entries must be nonnegative")

    def child(self, *index: int) -> "SeedStream":
        return SeedStream(self.root, self.path + tuple(index))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.root, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))

    def __str__(self):
        return f"{self.root}:{'/'.join(map(str, self.path))}"


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedStream):
        return seed.generator()
    return SeedStream(int(seed)).generator()


# --------------------------------------------------------------------------
# Model spaces


@dataclass(frozen=True)
class EuclideanBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    kind = "euclidean"

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) != len(upper) or len(lower) < 1:
            raise ValueError("box corners must have the same dimension n >= 1")
        if any(u < l for l, u in zip(lower, upper)):
            raise ValueError("box sides must be nonnegative")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_sides(cls, *sides: float) -> "EuclideanBox":
        return cls(tuple(0.0 for _ in sides), tuple(sides))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def canonical_mass(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def contains_region(self, other) -> bool:
        return (
            isinstance(other, EuclideanBox)
            and other.dim == self.dim
            and all(a >= b for a, b in zip(other.lower, self.lower))
            and all(a <= b for a, b in zip(other.upper, self.upper))
        )

    def enlarged(self, r: float) -> "EuclideanBox":
        return EuclideanBox(tuple(v - r for v in self.lower), tuple(v + r for v in self.upper))

    def eroded(self, r: float) -> "EuclideanBox":
        if np.any(self.sides < 2 * r):
            raise ValueError(f"box too small to erode by {r}")
        return self.enlarged(-r)

    def describe(self) -> str:
        return "x".join(f"[{l!r},{u!r}]" for l, u in zip(self.lower, self.upper))


@dataclass(frozen=True)
class HyperbolicDisk:
    """Annulus ``inner <= rho <= radius`` about the origin of the Poincare disk.

    ``inner = 0`` (the default) is the ordinary ball ``B(o, radius)``.
    """

    radius: float
    inner: float = 0.0

    kind = "hyperbolic"
    dim = 2

    def __post_init__(self):
        if not (0.0 <= self.inner <= self.radius):
            raise ValueError("need 0 <= inner <= radius")

    def canonical_mass(self) -> float:
        # 2 pi (cosh R - cosh R0), written with sinh^2 to stay accurate for small radii
        return TWO_PI * 2.0 * (math.sinh(self.radius / 2) ** 2 - math.sinh(self.inner / 2) ** 2)

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        r = np.hypot(pts[:, 0], pts[:, 1])
        slack = 1e-12
        ok = r <= math.tanh(self.radius / 2) * (1 + slack)
        if self.inner > 0:
            ok &= r >= math.tanh(self.inner / 2) * (1 - slack)
        return ok & (r < 1.0)

    def contains_region(self, other) -> bool:
        return (
            isinstance(other, HyperbolicDisk)
            and other.radius <= self.radius
            and other.inner >= self.inner
        )

    def enlarged(self, r: float) -> "HyperbolicDisk":
        return HyperbolicDisk(self.radius + r, max(self.inner - r, 0.0))

    def eroded(self, r: float) -> "HyperbolicDisk":
        if self.inner > 0:
            if self.radius - self.inner < 2 * r:
                raise ValueError(f"annulus too thin to erode by {r}")
            return HyperbolicDisk(self.radius - r, self.inner + r)
        if self.radius < r:
            raise ValueError(f"disk too small to erode by {r}")
        return HyperbolicDisk(self.radius - r)

    def describe(self) -> str:
        return f"radius={self.radius!r},inner={self.inner!r}"


@dataclass(frozen=True)
class BoundaryHeights:
    """Region ``{(xi, s): angle_lo <= xi <= angle_hi, s_min <= s <= s_max}``."""

    s_max: float
    s_min: float = -math.inf
    angle_lo: float = 0.0
    angle_hi: float = TWO_PI

    kind = "heights"
    dim = 2

    def __post_init__(self):
        if not self.s_min <= self.s_max:
            raise ValueError("need s_min <= s_max")
        if not (0.0 <= self.angle_lo <= self.angle_hi <= TWO_PI):
            raise ValueError("need 0 <= angle_lo <= angle_hi <= 2 pi")

    def canonical_mass(self) -> float:
        frac = (self.angle_hi - self.angle_lo) / TWO_PI
        if math.isinf(self.s_max):
            return math.inf if frac > 0 else 0.0
        return frac * (math.exp(self.s_max) - math.exp(self.s_min))

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        xi, s = pts[:, 0], pts[:, 1]
        return (xi >= self.angle_lo) & (xi <= self.angle_hi) & (s >= self.s_min) & (s <= self.s_max)

    def contains_region(self, other) -> bool:
        return (
            isinstance(other, BoundaryHeights)
            and other.s_max <= self.s_max
            and other.s_min >= self.s_min
            and other.angle_lo >= self.angle_lo
            and other.angle_hi <= self.angle_hi
        )

    def describe(self) -> str:
        return (
            f"s_max={self.s_max!r},s_min={self.s_min!r},"
            f"angle_lo={self.angle_lo!r},angle_hi={self.angle_hi!r}"
        )


SpaceModel = Union[EuclideanBox, HyperbolicDisk, BoundaryHeights]


@dataclass(frozen=True)
class IntensityMeasure:
    """``scale`` times the canonical measure of ``space``, restricted to the window."""

    space: SpaceModel
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("intensity scale must be positive")

    def mass(self) -> float:
        return mass(self)

    def restricted(self, region: SpaceModel) -> "IntensityMeasure":
        return IntensityMeasure(region, self.scale)


def mass(measure: IntensityMeasure) -> float:
    """Total mass of the window: ``scale * volume``, ``scale * 2 pi (cosh R - 1)``
    or ``scale * e^{s_max}`` for the three model spaces."""
    m = measure.space.canonical_mass()
    return 0.0 if m == 0 else measure.scale * m


def poisson_pmf(k, t):
    """``e^{-t} t^k / k!``, evaluated in log space."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("Poisson parameter must be positive")
    k = np.asarray(k)
    if np.any(k < 0):
        raise ValueError("k must be a nonnegative integer")
    out = np.exp(k * np.log(t) - t - gammaln(k + 1.0))
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True, eq=False)
class Configuration:
    """A finite simple point set lying in ``window``."""

    points: np.ndarray
    window: SpaceModel
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.window.dim)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.check and len(pts):
            if not np.all(self.window.contains(pts)):
                raise ValueError("configuration has points outside its window")
            if len(np.unique(pts, axis=0)) != len(pts):
                raise ValueError("configuration has duplicate points")

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.window == other.window
            and np.array_equal(self.points, other.points)
        )

    __hash__ = None


def count_in(config: Configuration, subregion: SpaceModel) -> int:
    """Number of points of ``config`` in ``subregion`` (which must lie in the window)."""
    if not config.window.contains_region(subregion):
        raise ValueError("subregion escapes the window; counts would be censored")
    if len(config) == 0:
        return 0
    return int(np.count_nonzero(subregion.contains(config.points)))


def _uniform_points(space: SpaceModel, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(space, EuclideanBox):
        lo, sides = np.asarray(space.lower), space.sides
        return lo + rng.random((n, space.dim)) * sides
    if isinstance(space, HyperbolicDisk):
        u = rng.random(n)
        theta = rng.random(n) * TWO_PI
        # inverse CDF of cosh(rho) - cosh(R0) over the annulus; asinh form keeps small radii exact
        s0, s1 = math.sinh(space.inner / 2) ** 2, math.sinh(space.radius / 2) ** 2
        rho = 2.0 * np.arcsinh(np.sqrt(s0 + u * (s1 - s0)))
        r = np.tanh(rho / 2)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    if isinstance(space, BoundaryHeights):
        u = rng.random(n)
        xi = space.angle_lo + rng.random(n) * (space.angle_hi - space.angle_lo)
        if math.isinf(space.s_min):
            s = space.s_max + np.log1p(-u)
        else:
            # e^s uniform on [e^{s_min}, e^{s_max}]
            s = space.s_max + np.log1p(-u * -np.expm1(space.s_min - space.s_max))
        return np.column_stack([xi, s])
    raise TypeError(f"unknown space {space!r}")


def sample_points(measure: IntensityMeasure, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. points from the normalised measure."""
    return _uniform_points(measure.space, n, as_generator(seed))


def sample_poisson(measure: IntensityMeasure, seed) -> Configuration:
    """Exact Poisson sample: ``N ~ Pois(mass)`` then ``N`` i.i.d. locations."""
    m = mass(measure)
    if not math.isfinite(m):
        raise UnboundedWindowError("unbounded window: the intensity measure has infinite mass")
    rng = as_generator(seed)
    n = int(rng.poisson(m)) if m > 0 else 0
    pts = _uniform_points(measure.space, n, rng)
    return Configuration(pts, measure.space, check=False)


# --------------------------------------------------------------------------
# Text serialisation


def format_window(space: SpaceModel) -> str:
    return f"space={space.kind} window={space.describe()}"


def parse_window(line: str) -> SpaceModel:
    kind_part, window_part = line.split(" ", 1)
    kind = kind_part.split("=", 1)[1]
    desc = window_part.split("=", 1)[1]
    if kind == "euclidean":
        intervals = desc.strip("[]").split("]x[")
        lo, hi = zip(*(map(float, iv.split(",")) for iv in intervals))
        return EuclideanBox(lo, hi)
    params = dict(item.split("=") for item in desc.split(","))
    params = {k: float(v) for k, v in params.items()}
    if kind == "hyperbolic":
        return HyperbolicDisk(params["radius"], params["inner"])
    if kind == "heights":
        return BoundaryHeights(**params)
    raise ValueError(f"unknown space kind {kind!r}")


def format_configuration(config: Configuration) -> str:
    lines = [format_window(config.window)]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in config.points]
    return "\n".join(lines) + "\n"


def parse_configuration(text: str) -> Configuration:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    window = parse_window(lines[0])
    pts = np.array([[float(v) for v in ln.split()] for ln in lines[1:]], dtype=float)
    return Configuration(pts.reshape(-1, window.dim), window)
