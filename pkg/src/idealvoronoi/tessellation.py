"""Voronoi and generalised Voronoi tessellations of finite function families.

A family is evaluated as a matrix ``values[q, i] = f_i(y_q)``; the cell of
member ``i`` is ``{y : f_i(y) <= f_j(y) for all j}`` (closed, so boundary points
belong to every minimiser).
"""
from __future__ import annotations

import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import hyperbolic as hyp
from .measure import Configuration, EuclideanBox, HyperbolicDisk

MARGIN_SENTINEL = sys.float_info.max


class ValidityError(ValueError):
    """Query lies outside the region where a truncated family is certified exact."""


class _Family:
    kind: str

    def __len__(self):
        raise NotImplementedError

    def values(self, queries) -> np.ndarray:
        raise NotImplementedError

    def member_values(self, i: int, queries) -> np.ndarray:
        return self.values(queries)[:, i]


@dataclass(frozen=True, eq=False)
class DistanceFamily(_Family):
    """``f_i(y) = d(x_i, y)`` for the sites of a configuration."""

    sites: Configuration

    @property
    def kind(self):
        return self.sites.window.kind

    def __len__(self):
        return len(self.sites)

    def _offsets(self):
        return 0.0

    def values(self, queries) -> np.ndarray:
        pts = self.sites.points
        if self.kind == "euclidean":
            q = np.asarray(queries, dtype=float).reshape(-1, pts.shape[1])
            d = np.linalg.norm(q[:, None, :] - pts[None, :, :], axis=-1)
        elif self.kind == "hyperbolic":
            q = hyp.as_complex(queries).ravel()
            d = hyp.hyperbolic_distance(q[:, None], hyp.as_complex(pts)[None, :])
        else:
            raise TypeError("distance families need a metric space")
        return d - self._offsets()


@dataclass(frozen=True, eq=False)
class NormalizedDistanceFamily(DistanceFamily):
    """``f_i(y) = d(x_i, y) - offset_i`` (global or per-site offset)."""

    offset: object = 0.0

    def _offsets(self):
        off = np.asarray(self.offset, dtype=float)
        return off if off.ndim == 0 else off[None, :]


@dataclass(frozen=True, eq=False)
class BusemannFamily(_Family):
    """``f_i(y) = B_{xi_i}(y) + s_i`` on the Poincare disk.

    ``r_valid`` is the radius of the ball about o on which the (height
    truncated) family is known to determine the full tessellation; ``None``
    means the family is complete.
    """

    xi: np.ndarray
    s: np.ndarray
    r_valid: float = None
    kind = "hyperbolic"

    def __post_init__(self):
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        object.__setattr__(self, "s", np.atleast_1d(np.asarray(self.s, dtype=float)))
        if self.xi.shape != self.s.shape:
            raise ValueError("xi and s must have the same length")

    def __len__(self):
        return len(self.xi)

    def values(self, queries) -> np.ndarray:
        q = hyp.as_complex(queries).ravel()
        return hyp.busemann(self.xi[None, :], q[:, None]) + self.s[None, :]

    def values_polar(self, rho, theta) -> np.ndarray:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        theta = np.broadcast_to(np.asarray(theta, dtype=float), rho.shape)
        return hyp.busemann_polar(self.xi[None, :], rho[:, None], theta[:, None]) + self.s[None, :]


FunctionFamily = _Family


@dataclass
class CellAssignment:
    queries: np.ndarray
    winner: np.ndarray
    margin: np.ndarray
    margin_infinite: bool = False
    tie: np.ndarray = field(default=None, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        dim = self.queries.shape[1]
        cols = [f"q{j}" for j in range(dim)]
        buf.write(",".join(cols + ["winner", "margin"]) + "\n")
        for q, w, m in zip(self.queries, self.winner, self.margin):
            buf.write(",".join([f"{v:.17g}" for v in q] + [str(int(w)), f"{m:.17g}"]) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CellAssignment":
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")][1:]
        data = np.array([[float(v) for v in ln.split(",")] for ln in rows]).reshape(len(rows), -1)
        margin = data[:, -1]
        return cls(data[:, :-2], data[:, -2].astype(int), margin,
                   margin_infinite=bool(len(margin) and np.all(margin == MARGIN_SENTINEL)))


def _query_array(family, queries) -> np.ndarray:
    if family.kind == "hyperbolic":
        z = hyp.as_complex(queries).ravel()
        return hyp.as_real_pairs(z)
    q = np.asarray(queries, dtype=float)
    if q.ndim == 1:
        q = q.reshape(-1, 1) if _family_dim(family) == 1 else q.reshape(1, -1)
    return q


def _family_dim(family) -> int:
    return family.sites.points.shape[1] if isinstance(family, DistanceFamily) else 2


def _winners(vals: np.ndarray):
    winner = np.argmin(vals, axis=1)
    best = vals[np.arange(len(vals)), winner]
    if vals.shape[1] == 1:
        margin = np.full(len(vals), MARGIN_SENTINEL)
    else:
        margin = np.partition(vals, 1, axis=1)[:, 1] - best
    return winner, best, margin


def assign(family, queries) -> CellAssignment:
    """Winner (argmin, lowest index on ties) and margin for each query point."""
    if len(family) == 0:
        raise ValueError("cannot assign cells of an empty family")
    q = _query_array(family, queries)
    vals = family.values(q)
    winner, _, margin = _winners(vals)
    return CellAssignment(q, winner, margin, margin_infinite=len(family) == 1, tie=margin == 0)


def cell_contains(family, i: int, y) -> bool:
    if not 0 <= i < len(family):
        raise IndexError(f"member index {i} out of range")
    vals = family.values(_query_array(family, y)[:1])[0]
    return bool(vals[i] <= vals.min())


def grid(window, h: float):
    """Grid points of spacing ``h`` covering ``window``; returns ``(points, shape, mask)``.

    Boxes use their own coordinates; disks use Poincare coordinates on the
    square ``[-r, r]^2`` with ``r = tanh(R/2)``, masked to the disk.
    """
    if h <= 0:
        raise ValueError("grid resolution must be positive")
    if isinstance(window, EuclideanBox):
        axes = [np.arange(lo, hi + 0.5 * h, h) for lo, hi in zip(window.lower, window.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        shape = mesh[0].shape
        return pts, shape, np.ones(shape, dtype=bool)
    if isinstance(window, HyperbolicDisk):
        r = math.tanh(window.radius / 2)
        ax = np.arange(-r, r + 0.5 * h, h)
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        mask = window.contains(np.column_stack([gx.ravel(), gy.ravel()])).reshape(gx.shape)
        return np.column_stack([gx.ravel(), gy.ravel()]), gx.shape, mask
    raise TypeError(f"cannot grid {window!r}")


def adjacency_probe(family, window, h: float) -> set[tuple[int, int]]:
    """Index pairs whose cells own neighbouring grid points (spacing ``h``)."""
    pts, shape, mask = grid(window, h)
    flat = np.flatnonzero(mask.ravel())
    labels = np.full(mask.size, -1)
    labels[flat] = assign(family, pts[flat]).winner
    labels = labels.reshape(shape)
    pairs = set()
    for axis in range(labels.ndim):
        a = np.moveaxis(labels, axis, 0)
        left, right = a[:-1].ravel(), a[1:].ravel()
        sel = (left >= 0) & (right >= 0) & (left != right)
        for i, j in zip(left[sel], right[sel]):
            pairs.add((int(min(i, j)), int(max(i, j))))
    return pairs


def unboundedness_probe(family: BusemannFamily, i: int, radii, direction: float = None) -> np.ndarray:
    """Does member ``i`` win at distance ``rho`` from o along a ray?

    By default the ray points at the member's own ideal point.  Along that ray
    ``f_i = s_i - rho`` while every other member is ``>= s_j - rho``, so only
    lighter atoms can compete and a height-truncated family is exact at every
    radius.  Other directions are only certified up to ``family.r_valid``.
    """
    if not 0 <= i < len(family):
        raise IndexError(f"member index {i} out of range")
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    own = direction is None
    theta = family.xi[i] if own else float(direction)
    if not own and family.r_valid is not None and np.any(radii > family.r_valid):
        raise ValidityError(f"probe radius exceeds the family's validity radius {family.r_valid}")
    vals = family.values_polar(radii, theta)
    return vals[:, i] <= vals.min(axis=1)


def lipschitz_violation(family, y, y2) -> float:
    """Largest ``|f(y) - f(y')| - d(y, y')`` over members and query pairs."""
    v1, v2 = family.values(y), family.values(y2)
    if family.kind == "hyperbolic":
        d = hyp.hyperbolic_distance(hyp.as_complex(y).ravel(), hyp.as_complex(y2).ravel())
    else:
        d = np.linalg.norm(np.asarray(y, dtype=float) - np.asarray(y2, dtype=float), axis=-1)
    return float(np.max(np.abs(v1 - v2) - np.reshape(d, (-1, 1))))
