"""Truncated Faber series for the action of the matrix exponential.

The Faber polynomials of an ellipse are built by a three-term recurrence
(stretched and shifted Chebyshev polynomials), so ``S_m(H) v`` only needs
``m`` operator applications and three work vectors.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass

import numpy as np

from .ellipse import EllipseParams, SpectralRectangle, ellipse_from_rectangle
from .linop import DiscreteOperator

__all__ = [
    "EllipseParams", "SpectralRectangle", "ellipse_from_rectangle",
    "FaberCoefficients", "faber_coefficients", "faber_apply",
    "scaling_squaring_apply", "faber_scalar_eval", "faber_partial_sums",
    "write_coefficients_csv", "QuadratureError", "SeriesDivergedError",
]

_NODE_CAP = 2 ** 20
_QUAD_RTOL = 1e-13


class QuadratureError(RuntimeError):
    pass


class SeriesDivergedError(FloatingPointError):
    pass


@dataclass(frozen=True)
class FaberCoefficients:
    values: np.ndarray
    degree: int
    ellipse: EllipseParams
    dt_scale: float = 1.0
    nodes: int = 0

    def __len__(self):
        return self.degree + 1


def _trapezoid_coefficients(d, a, b, m, n_nodes, radius=1.0):
    """Trapezoid rule for the Laurent coefficients of exp(psi) on |w| = radius.

    Returns the coefficients and the largest sample modulus, which sets the
    absolute round-off level ``eps * max|samples| / radius**j``.
    """
    gamma = 0.5 * (a + b)
    c1g = 0.5 * (a - b)  # c1 * gamma
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    w = radius * np.exp(1j * theta)
    with np.errstate(over="ignore", invalid="ignore"):
        samples = np.exp(d + gamma * w + c1g / w)
    # e^{-ij theta} weighting is exactly the forward DFT
    coef = np.fft.fft(samples)[: m + 1] / n_nodes
    coef /= radius ** np.arange(m + 1, dtype=float)
    return coef, float(np.max(np.abs(samples)))


def _refine_small(d, a, b, m, n_nodes, coef, peak):
    """Recompute coefficients that sit on the unit-circle round-off floor.

    exp(psi) is analytic for w != 0, so any circle |w| = r > 1 gives the same
    coefficients; their round-off level shrinks like r**-j.
    """
    gamma = 0.5 * (a + b)
    j = np.arange(m + 1)
    noise = 64 * np.finfo(float).eps * peak * np.ones(m + 1)
    best = coef.copy()
    radius = 2.0
    while gamma * radius < n_nodes / 16 and np.any(np.abs(best) < 1e3 * noise):
        cur, pk = _trapezoid_coefficients(d, a, b, m, n_nodes, radius)
        chk, _ = _trapezoid_coefficients(d, a, b, m, 2 * n_nodes, radius)
        cur_noise = 64 * np.finfo(float).eps * pk / radius ** j.astype(float)
        ok = np.isfinite(cur) & np.isfinite(cur_noise) & (cur_noise < noise)
        ok &= np.abs(cur - chk) <= np.maximum(cur_noise, 1e-13 * np.abs(cur))
        best[ok] = cur[ok]
        noise[ok] = cur_noise[ok]
        radius *= 2.0
    return best


@functools.lru_cache(maxsize=256)
def _cached_coefficients(d, a, b, m):
    n_nodes = 256
    while n_nodes < 4 * m:
        n_nodes *= 2
    prev, _ = _trapezoid_coefficients(d, a, b, m, n_nodes)
    while True:
        if not np.all(np.isfinite(prev)):
            break
        n_nodes *= 2
        if n_nodes > _NODE_CAP:
            break
        cur, peak = _trapezoid_coefficients(d, a, b, m, n_nodes)
        scale = np.max(np.abs(cur))
        if np.all(np.isfinite(cur)) and np.max(np.abs(cur - prev)) <= _QUAD_RTOL * scale:
            return _refine_small(d, a, b, m, n_nodes, cur, peak), n_nodes
        prev = cur
    raise QuadratureError(
        f"coefficient quadrature failed (d={d}, a={a}, b={b}, m={m})")


def faber_coefficients(ellipse: EllipseParams, m: int,
                       dt_scale: float = 1.0) -> FaberCoefficients:
    """Faber coefficients ``a_0..a_m`` of ``exp`` on ``ellipse``.

    ``a_j`` is the j-th Fourier coefficient of ``exp(psi(w))`` on the unit
    circle, ``psi(w) = d + gamma*w + c1*gamma/w`` the exterior map.
    ``dt_scale`` records the time step already folded into the ellipse;
    :func:`faber_apply` then multiplies each operator output by it.
    """
    if m < 0:
        raise ValueError("degree must be non-negative")
    raw, nodes = _cached_coefficients(float(ellipse.d), float(ellipse.a),
                                      float(ellipse.b), int(m))
    # the ellipse is symmetric about the real axis, imaginary parts are round-off
    values = raw.real.copy()
    values.setflags(write=False)
    return FaberCoefficients(values, int(m), ellipse, float(dt_scale), nodes)


def _check_pair(ellipse, coeffs):
    if coeffs.ellipse != ellipse:
        raise ValueError("coefficients were computed for a different ellipse")


def faber_apply(op: DiscreteOperator, ellipse: EllipseParams,
                coeffs: FaberCoefficients, v: np.ndarray) -> np.ndarray:
    """Return ``S_m(dt_scale * H) v`` with exactly ``m`` calls to ``op``."""
    _check_pair(ellipse, coeffs)
    a = coeffs.values
    m = coeffs.degree
    gamma, c0, c1 = ellipse.gamma, ellipse.c0, ellipse.c1
    scale = coeffs.dt_scale / gamma

    out = a[0] * v
    if m >= 1:
        f_prev = v
        f_cur = op.apply(v)
        f_cur *= scale
        f_cur -= c0 * v
        out += a[1] * f_cur
        for j in range(2, m + 1):
            f_next = op.apply(f_cur)
            f_next *= scale
            f_next -= c0 * f_cur
            f_next -= (2.0 * c1 if j == 2 else c1) * f_prev
            out += a[j] * f_next
            f_prev, f_cur = f_cur, f_next
    if not np.all(np.isfinite(out)):
        raise SeriesDivergedError("series diverged")
    return out


def scaling_squaring_apply(op: DiscreteOperator, ellipse: EllipseParams, m: int,
                           s: int, v: np.ndarray, dt_scale: float = 1.0) -> np.ndarray:
    """``(S_m(H/s))^s v``; ``ellipse`` encloses the spectrum of ``H/s``."""
    if s < 1:
        raise ValueError("s must be a positive integer")
    coeffs = faber_coefficients(ellipse, m, dt_scale=dt_scale / s)
    for _ in range(s):
        v = faber_apply(op, ellipse, coeffs, v)
    return v


def faber_scalar_eval(j: int, z, ellipse: EllipseParams):
    """``F_j(z)`` by the recurrence; ``z`` may be a scalar or an array."""
    if j < 0:
        raise ValueError("degree must be non-negative")
    z = np.asarray(z, dtype=complex)
    f_prev = np.ones_like(z)
    if j == 0:
        return f_prev if f_prev.ndim else complex(f_prev)
    f1 = z / ellipse.gamma - ellipse.c0
    f_cur = f1
    for k in range(2, j + 1):
        f_prev, f_cur = f_cur, f1 * f_cur - (2.0 if k == 2 else 1.0) * ellipse.c1 * f_prev
    return f_cur if f_cur.ndim else complex(f_cur)


def faber_partial_sums(matrix: np.ndarray, ellipse: EllipseParams, m: int,
                       dt_scale: float = 1.0):
    """Yield ``(j, S_j(H))`` for a dense matrix and ``j = 0..m``."""
    coeffs = faber_coefficients(ellipse, m, dt_scale)
    a = coeffs.values
    n = matrix.shape[0]
    eye = np.eye(n)
    hs = matrix * (dt_scale / ellipse.gamma)
    total = a[0] * eye
    yield 0, total.copy()
    f_prev, f_cur = eye, None
    for j in range(1, m + 1):
        if j == 1:
            f_next = hs - ellipse.c0 * eye
        else:
            f_next = hs @ f_cur - ellipse.c0 * f_cur
            f_next -= (2.0 * ellipse.c1 if j == 2 else ellipse.c1) * f_prev
            f_prev = f_cur
        f_cur = f_next
        total = total + a[j] * f_cur
        yield j, total


def write_coefficients_csv(coeffs: FaberCoefficients, path) -> None:
    """Rows ``(j, re(a_j), im(a_j))``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "re", "im"])
        for j, val in enumerate(coeffs.values):
            w.writerow([j, repr(float(np.real(val))), repr(float(np.imag(val)))])
