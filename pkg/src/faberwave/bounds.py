"""Truncation-error bounds for Faber series of exp and their validation.

Two bounds on ``max_E |exp - S_m|`` are provided: the classical two-branch
estimate (only valid for ellipses in the open right half plane) and a tail
sum ``sum_{j>m} |a_j| ||F_j||_E`` truncated at the degree where the terms
fall below ``eps/2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .ellipse import EllipseParams, SpectralRectangle, ellipse_from_rectangle, ellipse_with_focal
from .faber import faber_coefficients, faber_partial_sums, faber_scalar_eval


@dataclass
class BoundReport:
    degrees: np.ndarray
    literature_bound: np.ndarray
    literature_valid: bool
    proposed_bound: np.ndarray
    actual_error: np.ndarray | None
    eps: float
    m_eps_half: int
    ellipse: EllipseParams | None = None
    eigenvalues: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "literature", "literature_valid", "proposed", "actual"])
            for k, m in enumerate(self.degrees):
                act = "" if self.actual_error is None else repr(float(self.actual_error[k]))
                w.writerow([int(m), repr(float(self.literature_bound[k])),
                            int(self.literature_valid), repr(float(self.proposed_bound[k])), act])


def literature_bound(ellipse: EllipseParams, m: int) -> tuple[float, bool]:
    """Two-branch bound; returns ``(value, valid)``.

    ``valid`` is False unless the ellipse lies strictly in the right half
    plane, where the estimate is known to hold.
    """
    if m < 1:
        raise ValueError("degree must be at least 1")
    g = ellipse.gamma
    d = ellipse.d
    c_sq = abs(ellipse.cf_sq)
    valid = ellipse.d - ellipse.a > 0
    if m <= 2 * g and 4 * g - m > 0:
        expo = 4 * g * g / (4 * g - m) + d - m * m / (4 * g) + c_sq * (4 * g - m) / (16 * g * g)
        value = 8 * g / m * math.exp(min(expo, 709.0))
    else:
        # log form avoids overflow of (e*gamma/m)**m for small m
        log_val = math.log(4.0) + d + c_sq / (4 * m) + m * (1.0 + math.log(g / m))
        value = math.exp(min(log_val, 709.0))
    return value, valid


def faber_norm_on_ellipse(j: int, ellipse: EllipseParams, samples: int = 256) -> float:
    """``max_E |F_j|``: focal-axis vertices plus a boundary sampling safety net."""
    if j == 0:
        return 1.0
    z = np.concatenate([np.array(ellipse.focal_vertices()), ellipse.boundary(samples)])
    return float(np.max(np.abs(faber_scalar_eval(j, z, ellipse))))


def _term_table(ellipse, n_terms):
    coeffs = faber_coefficients(ellipse, n_terms).values
    norms = np.array([faber_norm_on_ellipse(j, ellipse) for j in range(n_terms + 1)])
    return np.abs(coeffs) * norms


def tail_terms(ellipse: EllipseParams, eps: float, m: int = 0) -> tuple[np.ndarray, int]:
    """Terms ``|a_j| ||F_j||_E`` for ``j = 0..m_eps_half`` and ``m_eps_half``.

    ``m_eps_half`` is the first degree beyond the coefficient hump
    (``j >= 2 gamma``) whose term drops below ``eps/2``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    g = ellipse.gamma
    cap = int(10 * max(2 * g, m) + 500)
    start = int(math.ceil(2 * g))
    n_terms = max(64, 2 * start, m + 1)
    while True:
        n_terms = min(n_terms, cap)
        terms = _term_table(ellipse, n_terms)
        below = np.nonzero(terms[start:] < 0.5 * eps)[0]
        below = below[below + start >= 1]
        if below.size:
            m_eps = int(below[0] + start)
            return terms[: m_eps + 1], m_eps
        if n_terms >= cap:
            raise ArithmeticError("no convergence at this precision")
        n_terms *= 2


def proposed_bound(ellipse: EllipseParams, m: int, eps: float) -> tuple[float, int]:
    """Tail-sum bound ``sum_{j=m+1}^{m_eps_half} |a_j| ||F_j||_E + eps/2``."""
    if m < 0:
        raise ValueError("degree must be non-negative")
    terms, m_eps = tail_terms(ellipse, eps, m)
    return float(np.sum(terms[m + 1:]) + 0.5 * eps), m_eps


def proposed_bound_curve(ellipse: EllipseParams, degrees, eps: float) -> tuple[np.ndarray, int]:
    degrees = np.asarray(degrees, dtype=int)
    terms, m_eps = tail_terms(ellipse, eps, int(degrees.max()))
    # suffix sums: tail[m] = sum_{j>m} terms[j]
    tail = np.concatenate([np.cumsum(terms[::-1])[::-1][1:], [0.0]])
    out = np.array([tail[m] if m < m_eps else 0.0 for m in degrees]) + 0.5 * eps
    return out, m_eps


def roundoff_eps(ellipse: EllipseParams, n: int, eps: float = 1e-14) -> float:
    """Smallest meaningful ``eps`` for an ``n x n`` dense evaluation of ``S_m``.

    Each recurrence term carries a relative rounding error of order
    ``n * u``, so the computed partial sums cannot resolve errors below
    about ``n * u * sum_j |a_j| ||F_j||_E``.
    """
    terms, _ = tail_terms(ellipse, eps)
    floor = n * np.finfo(float).eps * float(np.sum(terms))
    return max(eps, 2.0 * floor)


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian, sign-fixed)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def sample_normal_matrix(n_real, n_complex, real_range, complex_range, rng):
    """Real normal matrix ``P D P^T`` with conjugate-symmetric spectrum.

    ``complex_range = ((re_lo, re_hi), (im_lo, im_hi))``.  Returns the
    matrix, its eigenvalues and the exact exponential.
    """
    if n_complex % 2:
        raise ValueError("n_complex must be even (conjugate pairs)")
    n = n_real + n_complex
    reals = rng.uniform(*real_range, size=n_real)
    (re_lo, re_hi), (im_lo, im_hi) = complex_range
    half = n_complex // 2
    cre = rng.uniform(re_lo, re_hi, size=half)
    cim = rng.uniform(im_lo, im_hi, size=half)
    diag = np.zeros((n, n))
    expd = np.zeros((n, n))
    diag[np.arange(n_real), np.arange(n_real)] = reals
    expd[np.arange(n_real), np.arange(n_real)] = np.exp(reals)
    for k in range(half):
        i = n_real + 2 * k
        x, y = cre[k], cim[k]
        diag[i:i + 2, i:i + 2] = [[x, y], [-y, x]]
        ex = math.exp(x)
        expd[i:i + 2, i:i + 2] = [[ex * math.cos(y), ex * math.sin(y)],
                                  [-ex * math.sin(y), ex * math.cos(y)]]
    p = random_orthogonal(n, rng)
    eig = np.concatenate([reals, cre + 1j * cim, cre - 1j * cim])
    return p @ diag @ p.T, eig, p @ expd @ p.T


def faber_errors(matrix, exact, ellipse, degrees) -> np.ndarray:
    """Spectral norm of ``exp(H) - S_m(H)`` for each requested degree."""
    degrees = sorted(set(int(m) for m in degrees))
    want = set(degrees)
    errs = {}
    for j, partial in faber_partial_sums(matrix, ellipse, max(degrees)):
        if j in want:
            errs[j] = np.linalg.norm(exact - partial, ord=2)
    return np.array([errs[m] for m in degrees])


def normal_matrix_experiment(n=60, real_range=(2.8, 10.8),
                             complex_range=((2.8, 10.8), (-3.0, 3.0)),
                             n_real=10, n_complex=50, seed=0, eps=1e-14,
                             degrees=range(1, 61), roundoff_aware=True) -> BoundReport:
    """Bounds versus the measured error on a random real normal matrix.

    With ``roundoff_aware`` the requested ``eps`` is raised to the level the
    dense double-precision evaluation can actually resolve.
    """
    if n != n_real + n_complex:
        raise ValueError("n must equal n_real + n_complex")
    rng = np.random.default_rng(seed)
    h, eig, exact = sample_normal_matrix(n_real, n_complex, real_range, complex_range, rng)
    ellipse = ellipse_from_rectangle(SpectralRectangle.bounding(eig))
    degrees = np.asarray(list(degrees), dtype=int)
    lit = []
    valid = True
    for m in degrees:
        val, valid = literature_bound(ellipse, int(m))
        lit.append(val)
    if roundoff_aware:
        eps = roundoff_eps(ellipse, n, eps)
    prop, m_eps = proposed_bound_curve(ellipse, degrees, eps)
    actual = faber_errors(h, exact, ellipse, degrees)
    return BoundReport(degrees, np.array(lit), valid, prop, actual, eps, m_eps,
                       ellipse, eig)


EXPERIMENT_RANGES = {
    1: dict(real_range=(2.8, 10.8), complex_range=((2.8, 10.8), (-3.0, 3.0))),
    2: dict(real_range=(-8.0, 2.0), complex_range=((-8.0, 2.0), (-11.0, 11.0))),
}


def normal_matrix_with_spectrum(rect: SpectralRectangle, n_real=10, n_complex=50, seed=0):
    """Random real normal matrix with eigenvalues filling ``rect``.

    The two upper/lower corner pairs are always included so that the
    bounding rectangle of the spectrum is exactly ``rect``.
    """
    rng = np.random.default_rng(seed)
    h, eig, exact = sample_normal_matrix(
        n_real, n_complex - 4, (rect.re_min, rect.re_max),
        ((rect.re_min, rect.re_max), (0.0, rect.im_max)), rng)
    corners = np.array([rect.re_min + 1j * rect.im_max, rect.re_max + 1j * rect.im_max])
    n = h.shape[0] + 4
    p = random_orthogonal(n, rng)
    # reuse the sampled spectrum through its real Schur-like blocks
    d0 = np.zeros((n, n))
    e0 = np.zeros((n, n))
    m0 = h.shape[0]
    d0[:m0, :m0] = h
    e0[:m0, :m0] = exact
    for k, z in enumerate(corners):
        i = m0 + 2 * k
        x, y = z.real, z.imag
        d0[i:i + 2, i:i + 2] = [[x, y], [-y, x]]
        ex = math.exp(x)
        e0[i:i + 2, i:i + 2] = [[ex * math.cos(y), ex * math.sin(y)],
                                [-ex * math.sin(y), ex * math.cos(y)]]
    diag, expd = p @ d0 @ p.T, p @ e0 @ p.T
    eig = np.concatenate([eig, corners, corners.conj()])
    return diag, eig, expd


@dataclass
class SweepTable:
    degrees: np.ndarray
    labels: list
    ellipses: list
    errors: np.ndarray  # shape (len(labels), len(degrees))

    def error_of(self, label) -> np.ndarray:
        return self.errors[self.labels.index(label)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m"] + list(self.labels))
            for k, m in enumerate(self.degrees):
                w.writerow([int(m)] + [repr(float(e)) for e in self.errors[:, k]])


def ellipse_sweep_experiment(base_rect: SpectralRectangle, scales=(0.7, 0.85, 1.0, 1.15, 1.3),
                             m_range=range(1, 61), focal_fractions=(0.75, 0.5, 0.25),
                             seed=0, n_real=10, n_complex=50) -> SweepTable:
    """Error-versus-degree curves for a family of ellipses on one spectrum.

    Labels: ``scale=<s>`` for the minimum-capacity ellipse scaled about its
    center, ``focal=<f>`` for ellipses through the corners with ``cf_sq``
    reduced to ``f`` times the optimal one, and ``circle``.
    """
    if any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    h, eig, exact = normal_matrix_with_spectrum(base_rect, n_real, n_complex, seed)
    rect = SpectralRectangle.bounding(eig)
    best = ellipse_from_rectangle(rect)
    labels, ellipses = [], []
    for s in scales:
        labels.append(f"scale={s:g}")
        ellipses.append(best.scaled(s))
    for f in focal_fractions:
        labels.append(f"focal={f:g}")
        ellipses.append(ellipse_with_focal(rect, f * best.cf_sq))
    labels.append("circle")
    ellipses.append(ellipse_with_focal(rect, 0.0))
    degrees = np.asarray(list(m_range), dtype=int)
    errors = np.array([faber_errors(h, exact, e, degrees) for e in ellipses])
    return SweepTable(degrees, labels, ellipses, errors)
