"""Ricker sources and the augmented-matrix treatment of forcing terms.

A forcing ``f(x, t) = s(x) R(t)`` is Taylor expanded in time around the
start of each step; the expansion coefficients become the columns of a
block ``W`` coupled to a nilpotent shift block, so one step of the forced
problem is the exponential of a matrix one size ``p`` larger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .linop import DiscreteOperator

MAX_EXPANSION = 40


def _ricker_rate(f0):
    if f0 <= 0:
        raise ValueError("peak frequency must be positive")
    return (math.pi * f0) ** 2


def ricker(t, f0: float, t0: float):
    """``(1 - a tau^2) exp(-a tau^2)`` with ``a = (pi f0)^2``, ``tau = t - t0``."""
    a = _ricker_rate(f0)
    tau2 = a * (np.asarray(t, dtype=float) - t0) ** 2
    return (1.0 - tau2) * np.exp(-tau2)


def _ricker_antiderivative(tau, a):
    return 0.5 * tau * np.exp(-a * tau * tau) + 0.25 * math.sqrt(math.pi / a) * erf(math.sqrt(a) * tau)


def ricker_integral(t, f0: float, t0: float, t_start: float = 0.0):
    """``int_{t_start}^{t} ricker(s) ds`` in closed form."""
    a = _ricker_rate(f0)
    t = np.asarray(t, dtype=float)
    return _ricker_antiderivative(t - t0, a) - _ricker_antiderivative(t_start - t0, a)


def gaussian_derivatives(tau: float, a: float, count: int) -> np.ndarray:
    """``d^n/dtau^n exp(-a tau^2)`` for ``n = 0..count-1`` via Hermite recurrence."""
    sa = math.sqrt(a)
    x = sa * tau
    g = math.exp(-x * x)
    out = np.zeros(count)
    h_prev, h_cur = 0.0, 1.0  # H_{-1} (unused), H_0
    scale = 1.0
    for n in range(count):
        if n == 1:
            h_prev, h_cur = h_cur, 2.0 * x
        elif n > 1:
            h_prev, h_cur = h_cur, 2.0 * x * h_cur - 2.0 * (n - 1) * h_prev
        out[n] = scale * h_cur * g
        scale *= -sa
    return out


def ricker_derivatives(t: float, f0: float, t0: float, count: int) -> np.ndarray:
    """``[r(t), r'(t), ..., r^{(count-1)}(t)]`` in closed form.

    Uses ``r = g + tau g'/2`` with ``g`` the Gaussian, hence
    ``r^{(n)} = (1 + n/2) g^{(n)} + (tau/2) g^{(n+1)}``.
    """
    a = _ricker_rate(f0)
    tau = t - t0
    g = gaussian_derivatives(tau, a, count + 1)
    n = np.arange(count)
    return (1.0 + 0.5 * n) * g[:count] + 0.5 * tau * g[1:count + 1]


def mollifier(r, radius: float = 0.01):
    """``exp(r^2 / (r^2 - radius^2))`` inside the ball, 0 outside; 1 at the center."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < radius
    r2 = r[inside] ** 2
    out[inside] = np.exp(r2 / (r2 - radius * radius))
    return out


@dataclass(frozen=True)
class RickerSource:
    """Point-like Ricker source: ``mollifier(|x - center|) * ricker(t)``."""

    center: tuple
    f0: float = 25.0
    t0: float = 0.06
    radius: float = 0.01
    integrated: bool = False  # True when the formulation takes int_0^t f

    def spatial(self, coords) -> np.ndarray:
        r2 = sum((c - x0) ** 2 for c, x0 in zip(coords, self.center))
        return mollifier(np.sqrt(r2), self.radius)

    def value(self, t) -> float:
        if self.integrated:
            return float(ricker_integral(t, self.f0, self.t0))
        return float(ricker(t, self.f0, self.t0))

    def derivatives(self, t: float, count: int) -> np.ndarray:
        """Time derivatives ``0..count-1`` of the injected amplitude at ``t``."""
        if not self.integrated:
            return ricker_derivatives(t, self.f0, self.t0, count)
        out = np.empty(count)
        out[0] = ricker_integral(t, self.f0, self.t0)
        if count > 1:
            out[1:] = ricker_derivatives(t, self.f0, self.t0, count - 1)
        return out


class Forcing:
    """Separable forcing ``profile * amplitude(t)`` in state-vector coordinates."""

    def __init__(self, profile: np.ndarray, amplitude, derivatives):
        self.profile = np.asarray(profile, dtype=float)
        self.amplitude = amplitude
        self.derivatives = derivatives

    def __call__(self, t: float) -> np.ndarray:
        return self.profile * self.amplitude(t)

    @classmethod
    def from_source(cls, profile, source: RickerSource) -> "Forcing":
        return cls(profile, source.value, source.derivatives)

    @classmethod
    def polynomial(cls, profile, coeffs) -> "Forcing":
        """Amplitude ``sum_k coeffs[k] t^k`` (exact derivatives), for tests."""
        poly = np.polynomial.Polynomial(coeffs)

        def derivs(t, count):
            out = np.zeros(count)
            p = poly
            for k in range(count):
                out[k] = p(t)
                p = p.deriv()
            return out

        return cls(profile, lambda t: float(poly(t)), derivs)


class AugmentedOperator(DiscreteOperator):
    """``[[H, W], [0, J]]`` with ``W[:, p-1-k] = f^{(k)}(t_ref)`` and ``J`` the upper shift.

    Starting from ``[u; e_p]`` the tail evolves as ``tau^k/k!`` in slot
    ``p-1-k``, so the first block sees the Taylor polynomial of ``f``.
    """

    def __init__(self, op: DiscreteOperator, forcing: Forcing, p: int):
        if p < 1:
            raise ValueError("expansion order must be at least 1")
        if p > MAX_EXPANSION:
            raise ValueError(f"expansion order {p} exceeds the available derivatives ({MAX_EXPANSION})")
        self.base = op
        self.forcing = forcing
        self.p = int(p)
        self.weights = np.zeros(self.p)
        n = op.n
        super().__init__(n + self.p, self._matvec_aug, meta=dict(op.meta, augmented=self.p))

    def update(self, t_ref: float) -> None:
        """Refresh ``W`` with the forcing derivatives at ``t_ref``."""
        derivs = self.forcing.derivatives(t_ref, self.p)
        # column p-1-k holds the k-th derivative
        self.weights = derivs[::-1].copy()

    def _matvec_aug(self, z):
        n = self.base.n
        u, y = z[:n], z[n:]
        out = np.empty(z.shape, dtype=np.result_type(z.dtype, float))
        out[:n] = self.base._matvec(u)
        out[:n] += np.multiply.outer(self.forcing.profile, self.weights @ y) if z.ndim == 2 \
            else self.forcing.profile * float(self.weights @ y)
        out[n:-1] = y[1:]
        out[-1] = 0.0
        return out

    def initial(self, u: np.ndarray) -> np.ndarray:
        z = np.zeros(self.n)
        z[:self.base.n] = u
        z[-1] = 1.0
        return z


def augment_with_source(op: DiscreteOperator, forcing: Forcing, p: int) -> AugmentedOperator:
    return AugmentedOperator(op, forcing, p)
