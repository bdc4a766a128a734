"""Poincare-disk geometry: distances, Busemann functions and Mobius isometries.

Disk points are complex numbers ``z`` with ``|z| < 1`` (numpy arrays are fine
everywhere).  Ideal points are boundary angles ``xi`` in ``[0, 2 pi)``.

Far from the origin the disk coordinates lose precision (``1 - |z|^2`` is
tiny), so several functions also come in a polar flavour taking the
hyperbolic radius ``rho`` and angle ``theta`` directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def as_complex(points) -> np.ndarray:
    """``(N, 2)`` real array (or complex array) -> complex array."""
    arr = np.asarray(points)
    if np.iscomplexobj(arr):
        return arr
    arr = arr.astype(float)
    if arr.ndim >= 1 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr + 0j


def as_real_pairs(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return np.column_stack([z.real, z.imag])


def wrap_angle(xi):
    out = np.mod(xi, TWO_PI)
    # mod can round up to exactly 2 pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


def _one_minus_abs2(z):
    r = np.abs(z)
    return (1.0 - r) * (1.0 + r)


def hyperbolic_distance(z, w):
    """``acosh(1 + 2|z-w|^2 / ((1-|z|^2)(1-|w|^2)))``, in the ``2 asinh`` form."""
    z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
    q = np.abs(z - w) / np.sqrt(_one_minus_abs2(z) * _one_minus_abs2(w))
    return 2.0 * np.arcsinh(q)


def distance_from_origin(z):
    return 2.0 * np.arctanh(np.abs(np.asarray(z, dtype=complex)))


def polar_distance(rho1, theta1, rho2, theta2):
    """Distance between points given in geodesic polar coordinates about o."""
    half = 0.5 * (np.asarray(rho1) - np.asarray(rho2))
    q = np.sinh(half) ** 2 + np.sinh(rho1) * np.sinh(rho2) * np.sin(0.5 * (np.asarray(theta1) - theta2)) ** 2
    return 2.0 * np.arcsinh(np.sqrt(q))


def to_polar(z):
    z = np.asarray(z, dtype=complex)
    return distance_from_origin(z), wrap_angle(np.angle(z))


def from_polar(rho, theta):
    return np.tanh(np.asarray(rho) / 2.0) * np.exp(1j * np.asarray(theta))


def geodesic_ray(xi, t):
    """Point at distance ``t`` from o on the ray towards the ideal point ``xi``."""
    return from_polar(t, xi)


def busemann(xi, y):
    """``B_xi(y) = log(|e^{i xi} - y|^2 / (1 - |y|^2))``.

    Normalised so ``B_xi(o) = 0``; decreases towards ``xi``.
    """
    y = np.asarray(y, dtype=complex)
    boundary = np.exp(1j * np.asarray(xi, dtype=float))
    return 2.0 * np.log(np.abs(boundary - y)) - np.log(_one_minus_abs2(y))


def busemann_polar(xi, rho, theta):
    """Busemann function at the point with polar coordinates ``(rho, theta)``.

    ``B = log(cosh rho - sinh rho cos(theta - xi))``, rewritten as
    ``log(e^{-rho} + 2 sinh rho sin^2((theta - xi)/2))`` so it stays accurate
    along the ray towards ``xi``.
    """
    rho = np.asarray(rho, dtype=float)
    half = 0.5 * (np.asarray(theta) - np.asarray(xi))
    return np.log(np.exp(-rho) + 2.0 * np.sinh(rho) * np.sin(half) ** 2)


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving disk isometry ``z -> (a z + b) / (conj(b) z + conj(a))``
    with ``|a|^2 - |b|^2 = 1``."""

    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        det = abs(a) ** 2 - abs(b) ** 2
        # cancellation in |a|^2 - |b|^2 grows with the translation length
        if abs(det - 1.0) > 1e-12 * max(1.0, abs(a) ** 2 + abs(b) ** 2):
            raise ValueError(f"not an SU(1,1) matrix: |a|^2 - |b|^2 = {det!r}")

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1.0, 0.0)

    @classmethod
    def rotation(cls, phi: float) -> "Isometry":
        return cls(np.exp(0.5j * phi), 0.0)

    @classmethod
    def translation(cls, length: float, axis: float = 0.0) -> "Isometry":
        """Translation by ``length`` along the geodesic through o with ideal
        endpoints ``axis + pi`` (repelling) and ``axis`` (attracting)."""
        if length < 0:
            raise ValueError("translation length must be nonnegative")
        # r_axis . t_L . r_{-axis}
        return cls(math.cosh(length / 2), math.sinh(length / 2) * np.exp(1j * axis))

    def __matmul__(self, other: "Isometry") -> "Isometry":
        """Composition ``self o other``."""
        a1, b1, a2, b2 = self.a, self.b, other.a, other.b
        return Isometry(a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2))

    def inverse(self) -> "Isometry":
        return Isometry(np.conj(self.a), -self.b)

    @property
    def translation_length(self) -> float:
        """``d(o, g o)``."""
        return 2.0 * math.asinh(abs(self.b))

    def kak(self) -> tuple[float, float, float]:
        """Angles ``(alpha, length, beta)`` with ``g = rot(alpha) . t_length . rot(beta)``."""
        length = self.translation_length
        arg_a = float(np.angle(self.a))
        arg_b = float(np.angle(self.b)) if self.b != 0 else arg_a
        return arg_a + arg_b, length, arg_a - arg_b

    def origin_image(self):
        """``g o`` in polar coordinates ``(rho, theta)``."""
        return self.translation_length, float(wrap_angle(np.angle(self.b / np.conj(self.a))))

    def to_tuple(self) -> tuple[float, float, float, float]:
        return (self.a.real, self.a.imag, self.b.real, self.b.imag)

    @classmethod
    def from_tuple(cls, values) -> "Isometry":
        ra, ia, rb, ib = map(float, values)
        return cls(complex(ra, ia), complex(rb, ib))

    def __str__(self):
        return " ".join(f"{v:.17g}" for v in self.to_tuple())

    @classmethod
    def parse(cls, text: str) -> "Isometry":
        return cls.from_tuple(text.split())


def apply_isometry(g: Isometry, z):
    z = np.asarray(z, dtype=complex)
    return (g.a * z + g.b) / (np.conj(g.b) * z + np.conj(g.a))


def apply_boundary(g: Isometry, xi):
    """Boundary action, computed through the KAK angles instead of the matrix
    so that strong translations do not lose the repelled angles."""
    alpha, length, beta = g.kak()
    theta = np.asarray(xi, dtype=float) + beta
    half = 0.5 * theta
    # translation towards +1 acts as tan(theta'/2) = e^{-L} tan(theta/2)
    out = 2.0 * np.arctan2(np.exp(-0.5 * length) * np.sin(half), np.exp(0.5 * length) * np.cos(half))
    return wrap_angle(out + alpha)


def height_cocycle(g: Isometry, xi):
    """Additive Radon-Nikodym cocycle ``log c(g, xi) = B_xi(g^{-1} o)``."""
    rho, theta = g.inverse().origin_image()
    return busemann_polar(xi, rho, theta)


def transport_atoms(g: Isometry, xi, s):
    """Action on boundary-height pairs: ``(xi, s) -> (g xi, s + B_xi(g^{-1} o))``."""
    xi = np.asarray(xi, dtype=float)
    return apply_boundary(g, xi), np.asarray(s, dtype=float) + height_cocycle(g, xi)


def sample_isometry(length: float = 0.0, axis: float = 0.0, rotation: float = 0.0) -> Isometry:
    """Translation by ``length`` along the axis at angle ``axis``, preceded by a rotation."""
    return Isometry.translation(length, axis) @ Isometry.rotation(rotation)


def random_isometry(rng: np.random.Generator, max_length: float = 2.0) -> Isometry:
    return sample_isometry(
        rng.uniform(0.0, max_length), rng.uniform(0.0, TWO_PI), rng.uniform(0.0, TWO_PI)
    )
