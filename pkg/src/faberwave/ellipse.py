"""Ellipses symmetric about the real axis and spectral rectangles.

An ellipse is stored by its center ``d``, its semi-axes ``a`` (along the
real axis) and ``b`` (along the imaginary axis).  The squared focal
half-distance is kept as a signed real ``cf_sq = a**2 - b**2`` so that
vertically elongated ellipses (imaginary foci) stay in real arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class SpectralRectangle:
    """Axis-aligned box ``[re_min, re_max] x [-im_max, im_max]``."""

    re_min: float
    re_max: float
    im_max: float

    def __post_init__(self):
        if self.re_min > self.re_max:
            raise ValueError(f"re_min={self.re_min} exceeds re_max={self.re_max}")
        if self.im_max < 0:
            raise ValueError(f"im_max must be non-negative, got {self.im_max}")

    @property
    def center(self) -> float:
        return 0.5 * (self.re_min + self.re_max)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.re_max - self.re_min)

    def scaled(self, factor: float) -> "SpectralRectangle":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return SpectralRectangle(self.re_min * factor, self.re_max * factor,
                                 self.im_max * factor)

    def contains(self, z, atol: float = 0.0) -> np.ndarray:
        z = np.asarray(z)
        return ((z.real >= self.re_min - atol) & (z.real <= self.re_max + atol)
                & (np.abs(z.imag) <= self.im_max + atol))

    @classmethod
    def bounding(cls, eigenvalues) -> "SpectralRectangle":
        """Smallest conjugate-symmetric rectangle around a point set."""
        z = np.asarray(eigenvalues)
        return cls(float(z.real.min()), float(z.real.max()),
                   float(np.abs(z.imag).max()))


@dataclass(frozen=True)
class EllipseParams:
    """Ellipse ``E(d, c_f, a)`` with derived Faber constants."""

    d: float
    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("semi-axes must be non-negative")
        if not self.a + self.b > 0:
            raise ValueError("degenerate ellipse: gamma must be positive")
        for name in ("d", "a", "b"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_focal(cls, d: float, cf_sq: float, a: float) -> "EllipseParams":
        """Build from center, signed squared focal distance and real semi-axis."""
        b_sq = a * a - cf_sq
        if b_sq < 0:
            raise ValueError("inconsistent focal data: a**2 < cf_sq")
        return cls(d, a, math.sqrt(b_sq))

    @property
    def cf_sq(self) -> float:
        return self.a * self.a - self.b * self.b

    @property
    def gamma(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def c0(self) -> float:
        return self.d / self.gamma

    @property
    def c1(self) -> float:
        return self.cf_sq / (4.0 * self.gamma ** 2)

    @property
    def vertical(self) -> bool:
        """True when the foci lie on the vertical line through the center."""
        return self.b > self.a

    def scaled(self, factor: float) -> "EllipseParams":
        """Same center, both semi-axes multiplied by ``factor``."""
        return EllipseParams(self.d, self.a * factor, self.b * factor)

    def shifted(self, delta: float) -> "EllipseParams":
        return EllipseParams(self.d + delta, self.a, self.b)

    def contains(self, z, rtol: float = 1e-12) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        x = z.real - self.d
        y = z.imag
        with np.errstate(divide="ignore", invalid="ignore"):
            # collapsed axes only admit points on the remaining segment
            tx = np.where(self.a > 0, (x / (self.a or 1.0)) ** 2,
                          np.where(np.abs(x) <= rtol * self.gamma, 0.0, np.inf))
            ty = np.where(self.b > 0, (y / (self.b or 1.0)) ** 2,
                          np.where(np.abs(y) <= rtol * self.gamma, 0.0, np.inf))
        return tx + ty <= 1.0 + rtol

    def boundary(self, n: int = 256) -> np.ndarray:
        t = 2.0 * np.pi * np.arange(n) / n
        return self.d + self.a * np.cos(t) + 1j * self.b * np.sin(t)

    def focal_vertices(self) -> tuple[complex, complex]:
        """The two points where the ellipse meets the line through its foci."""
        if self.vertical:
            return complex(self.d, self.b), complex(self.d, -self.b)
        return complex(self.d + self.a, 0.0), complex(self.d - self.a, 0.0)

    def as_dict(self) -> dict:
        return {"d": self.d, "a": self.a, "b": self.b, "cf_sq": self.cf_sq,
                "gamma": self.gamma, "c0": self.c0, "c1": self.c1}


def ellipse_from_rectangle(rect: SpectralRectangle) -> EllipseParams:
    """Minimum-capacity axis-aligned ellipse through the rectangle corners.

    Ellipses centered at the rectangle midpoint and passing through the
    corner ``(w, h)`` are ``a = w / cos(phi)``, ``b = h / sin(phi)``;
    ``a + b`` is minimized at ``tan(phi)**3 = h / w``.
    """
    w = rect.half_width
    h = rect.im_max
    d = rect.center
    if w <= 0 and h <= 0:
        raise ValueError("empty spectrum")
    if w <= 0:
        return EllipseParams(d, 0.0, h)
    if h <= 0:
        return EllipseParams(d, w, 0.0)
    t = (h / w) ** (1.0 / 3.0)
    # a = w * sqrt(1 + tan^2), b = h * sqrt(1 + cot^2)
    a = w * math.sqrt(1.0 + t * t)
    b = h * math.sqrt(1.0 + 1.0 / (t * t))
    return EllipseParams(d, a, b)


def ellipse_with_focal(rect: SpectralRectangle, cf_sq: float) -> EllipseParams:
    """Smallest ellipse with prescribed ``cf_sq`` through the rectangle corners.

    ``cf_sq = 0`` gives the circumscribed circle.
    """
    w = rect.half_width
    h = rect.im_max
    if w <= 0 and h <= 0:
        raise ValueError("empty spectrum")

    def excess(a):
        b_sq = a * a - cf_sq
        lhs = (w / a) ** 2 if w > 0 else 0.0
        return lhs + (h * h / b_sq if h > 0 else 0.0) - 1.0

    scale = max(w, h, math.sqrt(abs(cf_sq)))
    lo = math.sqrt(cf_sq) * (1 + 1e-12) if cf_sq > 0 else 1e-12 * scale
    hi = scale * 4.0 + 1.0
    while excess(hi) > 0:
        hi *= 2.0
    if excess(lo) <= 0:
        a = lo
    else:
        a = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14)
    return EllipseParams.from_focal(rect.center, cf_sq, a)
