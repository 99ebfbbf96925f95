"""Von Neumann stability and dispersion of the Faber scheme.

Periodic, damping-free, constant-coefficient media.  Each Fourier mode
evolves by ``G = S_m(dt H)`` with ``dt H`` a small symbol matrix.  Since
``G`` is a polynomial in ``dt H`` its eigenvalues are ``S_m(lambda)`` for
the symbol eigenvalues ``lambda`` (spectral mapping), which gives both the
spectral radius and a branch-exact numerical frequency per mode.

Field amplitudes are taken relative to the phase at their own staggered
position, so both staggered first differences act as ``i s(theta)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .ellipse import EllipseParams
from .faber import faber_coefficients
from .operators import Formulation
from .stencils import CENTERED_SECOND, STAGGERED_WEIGHTS, second_symbol, staggered_symbol

DEFAULT_ELASTIC = {"rho": 0.25, "mu": 1.0, "lam": 8.0}
ELLIPSE_MARGIN = 0.02
GRID_1D = 512
GRID_2D = 64


def node_phase_symbols(theta, order):
    """Forward (node -> half) and backward (half -> node) first differences on ``exp(i j theta)``.

    Phases are taken at node ``i`` for both, as in the classical tables;
    ``dplus = exp(i theta/2) i s`` and ``dminus = exp(-i theta/2) i s``.
    """
    theta = np.asarray(theta, dtype=float)
    c = STAGGERED_WEIGHTS[order]
    dplus = sum(ck * (np.exp(1j * (k + 1) * theta) - np.exp(-1j * k * theta)) for k, ck in enumerate(c))
    dminus = sum(ck * (np.exp(1j * k * theta) - np.exp(-1j * (k + 1) * theta)) for k, ck in enumerate(c))
    return dplus, dminus


@dataclass
class SymbolMatrix:
    """``dt H`` for one or many Fourier modes; ``entries`` has shape ``(..., k, k)``."""

    entries: np.ndarray
    formulation: Formulation
    order: int
    theta: tuple
    alpha: float
    material: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[-1]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.entries)


def _thetas(formulation, theta):
    if formulation.ndim == 1:
        th = np.atleast_1d(np.asarray(theta, dtype=float)) if np.ndim(theta) else np.asarray([float(theta)])
        return (th,)
    tx, ty = theta
    tx, ty = np.broadcast_arrays(np.asarray(tx, dtype=float), np.asarray(ty, dtype=float))
    return (np.atleast_1d(tx), np.atleast_1d(ty))


def _unit_symbol(formulation, order, thetas, material):
    """Symbol of ``dt H`` at ``alpha = 1``, shape ``(n_modes, k, k)``."""
    if formulation.ndim == 1:
        (th,) = thetas
        n = th.size
        if formulation.first_order:
            s = 1j * staggered_symbol(th, order)
            out = np.zeros((n, 2, 2), dtype=complex)
            out[:, 0, 1] = s
            out[:, 1, 0] = s
            return out
        out = np.zeros((n, 2, 2), dtype=complex)
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = second_symbol(th, order)
        return out
    tx, ty = thetas
    n = tx.size
    sx = 1j * staggered_symbol(tx, order)
    sy = 1j * staggered_symbol(ty, order)
    if formulation is Formulation.ACOUSTIC2D_1SD:
        out = np.zeros((n, 3, 3), dtype=complex)
        out[:, 0, 1], out[:, 0, 2] = sx, sy
        out[:, 1, 0], out[:, 2, 0] = sx, sy
        return out
    if formulation is Formulation.ACOUSTIC2D_2SD:
        out = np.zeros((n, 2, 2), dtype=complex)
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = second_symbol(tx, order) + second_symbol(ty, order)
        return out
    # elastic: (v_x, v_y, T_xx, T_xy, T_yy), scaled so alpha uses the P velocity
    rho, mu, lam = material["rho"], material["mu"], material["lam"]
    p = lam + 2.0 * mu
    vp = math.sqrt(p / rho)
    out = np.zeros((n, 5, 5), dtype=complex)
    out[:, 0, 2], out[:, 0, 3] = sx / rho, sy / rho
    out[:, 1, 3], out[:, 1, 4] = sx / rho, sy / rho
    out[:, 2, 0], out[:, 2, 1] = p * sx, lam * sy
    out[:, 3, 0], out[:, 3, 1] = mu * sy, mu * sx
    out[:, 4, 0], out[:, 4, 1] = lam * sx, p * sy
    return out / vp


def _material(formulation, material):
    if formulation.elastic:
        return dict(DEFAULT_ELASTIC, **(material or {}))
    return dict(material or {})


def symbol_deltaH(formulation, order: int, theta, alpha: float, material: dict | None = None) -> SymbolMatrix:
    """``dt H`` of a Fourier mode with Courant number ``alpha = c dt / dx``.

    1D: ``theta`` scalar or array; 2D: ``(theta_x, theta_y)``.  Acoustic
    symbols do not depend on ``c`` once written in ``alpha``.  The elastic
    symbol drops the two displacement rows and uses the P velocity in
    ``alpha``.
    """
    formulation = Formulation.parse(formulation)
    if order not in STAGGERED_WEIGHTS:
        raise ValueError("order must be 4 or 8")
    material = _material(formulation, material)
    thetas = _thetas(formulation, theta)
    entries = alpha * _unit_symbol(formulation, order, thetas, material)
    if np.ndim(theta) == 0 or (formulation.ndim == 2 and all(np.ndim(t) == 0 for t in theta)):
        entries = entries[0]
    return SymbolMatrix(entries, formulation, order, tuple(thetas), float(alpha), material)


def amplification_matrix(symbol: SymbolMatrix, ellipse: EllipseParams, m: int) -> np.ndarray:
    """``G = sum_j a_j F_j(dt H)`` by the matrix recurrence (batched over modes)."""
    a = faber_coefficients(ellipse, m).values
    z = np.asarray(symbol.entries, dtype=complex)
    eye = np.broadcast_to(np.eye(z.shape[-1]), z.shape)
    f_prev = eye.astype(complex)
    g = a[0] * f_prev
    if m == 0:
        return g
    f1 = z / ellipse.gamma - ellipse.c0 * eye
    f_cur = f1
    g = g + a[1] * f_cur
    for j in range(2, m + 1):
        f_next = f1 @ f_cur - (2.0 if j == 2 else 1.0) * ellipse.c1 * f_prev
        g = g + a[j] * f_next
        f_prev, f_cur = f_cur, f_next
    return g


def faber_scalar_series(z, ellipse: EllipseParams, m: int) -> np.ndarray:
    """``S_m(z)`` for an array of scalars."""
    a = faber_coefficients(ellipse, m).values
    z = np.asarray(z, dtype=complex)
    f_prev = np.ones_like(z)
    out = a[0] * f_prev
    if m == 0:
        return out
    f1 = z / ellipse.gamma - ellipse.c0
    f_cur = f1
    out = out + a[1] * f_cur
    for j in range(2, m + 1):
        f_prev, f_cur = f_cur, f1 * f_cur - (2.0 if j == 2 else 1.0) * ellipse.c1 * f_prev
        out = out + a[j] * f_cur
    return out


def theta_grid(formulation, n: int | None = None, include_zero: bool = True):
    """Uniform grid on ``[0, pi]`` (per axis in 2D), optionally without ``0``."""
    formulation = Formulation.parse(formulation)
    n = n or (GRID_1D if formulation.ndim == 1 else GRID_2D)
    th = np.linspace(0.0, math.pi, n) if include_zero else np.linspace(math.pi / n, math.pi, n)
    if formulation.ndim == 1:
        return th
    tx, ty = np.meshgrid(th, th, indexing="ij")
    return (tx.ravel(), ty.ravel())


@dataclass
class _ModeSet:
    """Unit-``alpha`` symbol eigenvalues over a theta grid, with the physical frequency of each."""

    eig: np.ndarray        # (n_modes, k)
    physical: np.ndarray   # |k| * relative branch speed, same shape
    radius: float          # max |eig|

    @classmethod
    def build(cls, formulation, order, theta, material):
        sym = symbol_deltaH(formulation, order, theta, 1.0, material)
        entries = sym.entries if sym.entries.ndim == 3 else sym.entries[None]
        eig = np.linalg.eigvals(entries)
        knorm = np.sqrt(sum(t ** 2 for t in sym.theta)).reshape(-1, 1)
        physical = knorm * _branch_speed(sym, eig)
        return cls(eig, physical, float(np.max(np.abs(eig))))


def _branch_speed(symbol: SymbolMatrix, lam: np.ndarray) -> np.ndarray:
    """Speed of each eigenvalue's branch relative to ``c`` (P velocity for elastic).

    Elastic eigenvalues are ``+-i |s|`` (P) and ``+-i (vs/vp) |s|`` (S) for
    the staggered symbol vector ``s``; each is assigned to the nearer one.
    """
    if not symbol.formulation.elastic:
        return np.ones(lam.shape)
    mat = symbol.material
    ratio = math.sqrt(mat["mu"] / (mat["lam"] + 2.0 * mat["mu"]))
    snorm = np.sqrt(sum(staggered_symbol(t, symbol.order) ** 2 for t in symbol.theta)).reshape(-1, 1)
    unit = np.abs(lam) / (symbol.alpha * np.where(snorm > 0, snorm, 1.0))
    if abs(1.0 - ratio) < 1e-8:
        raise ValueError("P and S branches coincide; cannot assign branches")
    return np.where(np.abs(unit - 1.0) <= np.abs(unit - ratio), 1.0, ratio)


def symbol_ellipse(radius: float, alpha: float, margin: float = ELLIPSE_MARGIN) -> EllipseParams:
    """Vertical segment ``[-i r, i r]`` with ``r = alpha * radius * (1 + margin)``."""
    return EllipseParams(0.0, 0.0, alpha * radius * (1.0 + margin))


def _modes(formulation, order, theta, material, include_zero=True):
    formulation = Formulation.parse(formulation)
    theta = theta_grid(formulation, include_zero=include_zero) if theta is None else theta
    return _ModeSet.build(formulation, order, theta, _material(formulation, material))


def max_spectral_radius(formulation, order, m, alpha, theta=None, material=None, modes=None) -> float:
    """``max_theta rho(G)`` on the grid."""
    modes = modes or _modes(formulation, order, theta, material)
    if alpha == 0:
        return 1.0
    ell = symbol_ellipse(modes.radius, alpha)
    return float(np.max(np.abs(faber_scalar_series(alpha * modes.eig, ell, m))))


SCAN_START = 1e-2
SCAN_STEP = 1.05


def _first_failure(predicate, lo, step, limit):
    """Scan ``lo*step^k`` upward; return the last passing and first failing value."""
    prev, alpha = 0.0, lo
    while alpha <= limit:
        if not predicate(alpha):
            return prev, alpha
        prev, alpha = alpha, alpha * step
    return prev, None


def _bisect(predicate, lo, hi, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _largest_alpha(predicate, upper, tol):
    """First boundary of ``predicate`` in ``alpha``: geometric 5% scan, then bisection.

    Scanning first finds the first boundary even when passing windows
    reappear further out.  The scan extends past ``upper`` by doubling.
    """
    limit = upper
    while True:
        lo, hi = _first_failure(predicate, SCAN_START, SCAN_STEP, limit)
        if hi is not None or limit > 1e3:
            break
        limit *= 2.0
    if hi is None:
        return lo
    alpha = _bisect(predicate, lo, hi, tol)
    return alpha if alpha >= tol else 0.0


def cfl_number(formulation, order: int, m: int, eps: float = 1e-7, grid: int | None = None,
               material: dict | None = None, tol: float = 1e-4, upper: float = 4.0) -> float:
    """Largest ``alpha`` with ``max rho(G) <= 1 + eps``, up to the first instability."""
    if m < 1:
        raise ValueError("degree must be at least 1")
    formulation = Formulation.parse(formulation)
    modes = _modes(formulation, order, theta_grid(formulation, grid), material)
    return _largest_alpha(
        lambda a: max_spectral_radius(formulation, order, m, a, modes=modes) <= 1.0 + eps, upper, tol)


def _positive_modes(eig, tol=1e-12):
    """Mask of eigenvalues with positive imaginary part (the forward branches)."""
    scale = max(float(np.max(np.abs(eig))), 1.0)
    return eig.imag > tol * scale


def _numerical_phase(g_eig, lam):
    """``arg g`` on the 2*pi branch nearest ``Im lam``."""
    ph = np.angle(g_eig)
    return ph + 2.0 * math.pi * np.round((lam.imag - ph) / (2.0 * math.pi))


def _relative_error(g, lam, physical, alpha, reference):
    phase = _numerical_phase(g, lam)
    if reference == "semi_discrete":
        exact = lam.imag
    elif reference == "physical":
        exact = alpha * physical
    else:
        raise ValueError(f"unknown reference {reference!r}")
    fwd = _positive_modes(lam)
    err = np.zeros(lam.shape)
    err[fwd] = np.abs(phase[fwd] / exact[fwd] - 1.0)
    return err.max(axis=1)


def dispersion_error(symbol: SymbolMatrix, ellipse: EllipseParams | None, m: int, alpha: float | None = None,
                     theta=None, reference: str = "physical") -> np.ndarray:
    """``|R - 1|`` per mode, maximized over the forward branches.

    ``reference="physical"`` compares with ``c |k|`` (velocity of each
    branch); ``"semi_discrete"`` compares with the frequency of the
    spatially discrete operator, isolating the time integration.  With
    ``ellipse=None`` the exact exponential is used.
    """
    alpha = symbol.alpha if alpha is None else alpha
    if alpha != symbol.alpha or theta is not None:
        symbol = symbol_deltaH(symbol.formulation, symbol.order, symbol.theta if theta is None else theta,
                               alpha, symbol.material)
    entries = np.asarray(symbol.entries)
    batched = entries.ndim == 3
    lam = np.linalg.eigvals(entries if batched else entries[None])
    knorm = np.sqrt(sum(t ** 2 for t in symbol.theta)).reshape(-1, 1)
    if np.any(knorm == 0):
        raise ValueError("theta = 0 has no dispersion ratio")
    g = np.exp(lam) if ellipse is None else faber_scalar_series(lam, ellipse, m)
    out = _relative_error(g, lam, knorm * _branch_speed(symbol, lam), alpha, reference)
    return out if batched else out[0]


def semi_discrete_ratio(order: int, theta) -> np.ndarray:
    """``s(theta) / theta``: phase-velocity ratio of the staggered stencil, exact in time."""
    theta = np.asarray(theta, dtype=float)
    return staggered_symbol(theta, order) / theta


def max_dispersion_error(formulation, order, m, alpha, theta=None, material=None,
                         reference: str = "semi_discrete", modes=None) -> float:
    """Largest ``|R - 1|`` over the grid (``theta`` in ``(0, pi]`` by default)."""
    modes = modes or _modes(formulation, order, theta, material, include_zero=False)
    lam = alpha * modes.eig
    g = faber_scalar_series(lam, symbol_ellipse(modes.radius, alpha), m)
    return float(np.max(_relative_error(g, lam, modes.physical, alpha, reference)))


def dispersion_alpha(formulation, order: int, m: int, eps_r: float = 1e-5, material: dict | None = None,
                     tol: float = 1e-4, reference: str = "semi_discrete", upper: float = 4.0) -> float:
    """Largest ``alpha`` with dispersion error below ``eps_r`` on the grid (0 if none)."""
    if m < 1:
        raise ValueError("degree must be at least 1")
    modes = _modes(formulation, order, None, material, include_zero=False)
    return _largest_alpha(
        lambda a: max_dispersion_error(formulation, order, m, a, reference=reference, modes=modes) < eps_r,
        upper, tol)


@dataclass
class StabilityReport:
    formulation: str
    order: int
    degrees: list
    cfl: np.ndarray
    n_op_cfl: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "c_cfl", "n_op_cfl"])
            for m, c, n in zip(self.degrees, self.cfl, self.n_op_cfl):
                w.writerow([m, f"{c:.6f}", f"{n:.6f}"])


@dataclass
class DispersionReport:
    formulation: str
    order: int
    degrees: list
    alpha_r: np.ndarray
    n_op_alpha: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "alpha_r", "n_op_alpha"])
            for m, a, n in zip(self.degrees, self.alpha_r, self.n_op_alpha):
                w.writerow([m, f"{a:.6f}", f"{n:.6f}"])


def _ratio(m, x):
    return m / x if x > 0 else math.inf


def stability_report(formulation, order: int, degrees=range(3, 41), **kw) -> StabilityReport:
    formulation = Formulation.parse(formulation)
    degrees = list(degrees)
    cfl = np.array([cfl_number(formulation, order, m, **kw) for m in degrees])
    n_op = np.array([_ratio(m, c) for m, c in zip(degrees, cfl)])
    grid = kw.get("grid") or (GRID_1D if formulation.ndim == 1 else GRID_2D)
    return StabilityReport(formulation.value, order, degrees, cfl, n_op,
                           {"theta_grid": grid, "eps": kw.get("eps", 1e-7)})


def dispersion_report(formulation, order: int, degrees=range(3, 41), **kw) -> DispersionReport:
    formulation = Formulation.parse(formulation)
    degrees = list(degrees)
    alpha = np.array([dispersion_alpha(formulation, order, m, **kw) for m in degrees])
    n_op = np.array([_ratio(m, a) for m, a in zip(degrees, alpha)])
    grid = GRID_1D if formulation.ndim == 1 else GRID_2D
    return DispersionReport(formulation.value, order, degrees, alpha, n_op,
                            {"theta_grid": f"{grid} points per axis on (0, pi]",
                             "reference": kw.get("reference", "semi_discrete")})


def exact_amplification(symbol: SymbolMatrix) -> np.ndarray:
    """``exp(dt H)`` of a single mode (dense oracle)."""
    return scipy.linalg.expm(np.asarray(symbol.entries))


def autocorrelation(x) -> np.ndarray:
    """Normalized autocorrelation of a detrended sequence, lags ``0..len-1``."""
    x = np.asarray(x, dtype=float)
    t = np.arange(x.size)
    resid = x - np.polyval(np.polyfit(t, x, 1), t)
    resid = resid - resid.mean()
    full = np.correlate(resid, resid, mode="full")[x.size - 1:]
    return full / full[0] if full[0] > 0 else full


def inverse_power_detrend(degrees, values, powers: int = 3) -> np.ndarray:
    """Residual of a least-squares fit in ``1, 1/m, ..., 1/m**powers``.

    ``m / c(m)`` curves decay roughly like a rational function of ``m``;
    removing that trend leaves the degree-to-degree oscillation.
    """
    m = np.asarray(degrees, dtype=float)
    x = np.asarray(values, dtype=float)
    basis = np.column_stack([m ** -k for k in range(powers + 1)])
    coef, *_ = np.linalg.lstsq(basis, x, rcond=None)
    return x - basis @ coef


def oscillation_lag(degrees, values, lags=range(2, 9)) -> tuple[int, np.ndarray]:
    """Lag in ``lags`` where the autocorrelation of the detrended sequence peaks."""
    resid = inverse_power_detrend(degrees, values)
    resid = resid - resid.mean()
    full = np.correlate(resid, resid, mode="full")[resid.size - 1:]
    acf = full / full[0] if full[0] > 0 else full
    lags = [k for k in lags if k < acf.size]
    return int(lags[int(np.argmax(acf[lags]))]), acf


def local_minima(values) -> np.ndarray:
    """Indices of strict interior local minima."""
    x = np.asarray(values, dtype=float)
    return np.nonzero((x[1:-1] < x[:-2]) & (x[1:-1] < x[2:]))[0] + 1
