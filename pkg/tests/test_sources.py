import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from numpy.polynomial import Polynomial

from faberwave.ellipse import EllipseParams, SpectralRectangle, ellipse_from_rectangle
from faberwave.faber import faber_apply, faber_coefficients
from faberwave.linop import DiscreteOperator
from faberwave.sources import (MAX_EXPANSION, Forcing, RickerSource, augment_with_source, mollifier, ricker,
                               ricker_derivatives, ricker_integral)

F0, T0 = 25.0, 0.06


def _derivative_oracle(t, count):
    """Derivatives of P(tau) exp(-a tau^2) via (P' - 2 a tau P) on polynomial coefficients."""
    a = (math.pi * F0) ** 2
    tau = t - T0
    poly = Polynomial([1.0, 0.0, -a])
    out = []
    for _ in range(count):
        out.append(poly(tau) * math.exp(-a * tau * tau))
        poly = poly.deriv() - 2 * a * Polynomial([0.0, 1.0]) * poly
    return np.array(out)


def test_ricker_values():
    assert ricker(T0, F0, T0) == 1.0
    assert abs(ricker(T0 + 1.0, F0, T0)) < 1e-300
    assert abs(ricker(T0 - 1.0, F0, T0)) < 1e-300


@pytest.mark.parametrize("t", [0.0, 0.03, 0.06, 0.071, 0.1])
def test_ricker_derivatives(t):
    got = ricker_derivatives(t, F0, T0, 14)
    want = _derivative_oracle(t, 14)
    scale = np.maximum(np.abs(want), (math.pi * F0) ** np.arange(14) * 1e-6)
    assert np.all(np.abs(got - want) <= 1e-10 * scale)


def test_ricker_integral():
    rng = np.random.default_rng(0)
    for t in rng.uniform(0.0, 0.2, 20):
        want, _ = scipy.integrate.quad(lambda s: ricker(s, F0, T0), 0.0, t, epsabs=1e-14, epsrel=1e-13)
        assert ricker_integral(t, F0, T0) == pytest.approx(want, abs=1e-13)
    h = 1e-6
    ts = rng.uniform(0.0, 0.2, 100)
    fd = (ricker_integral(ts + h, F0, T0) - ricker_integral(ts - h, F0, T0)) / (2 * h)
    assert np.max(np.abs(fd - ricker(ts, F0, T0))) < 1e-6


def test_integrated_source_derivatives():
    src = RickerSource((1.0,), integrated=True)
    d = src.derivatives(0.05, 4)
    assert d[0] == pytest.approx(float(ricker_integral(0.05, F0, T0)))
    assert np.allclose(d[1:], ricker_derivatives(0.05, F0, T0, 3))
    assert src.value(0.05) == d[0]


def test_mollifier():
    assert mollifier(0.0) == 1.0
    assert mollifier(0.01) == 0.0 and mollifier(0.5) == 0.0
    r = np.linspace(0, 0.0099, 50)
    assert np.all(np.diff(mollifier(r)) < 0)


def _exp_dt(op, dt, m, v):
    """S_m(dt H) v on the disc of radius dt (enough for nilpotent blocks)."""
    e = EllipseParams(0.0, dt, dt)
    return faber_apply(op, e, faber_coefficients(e, m, dt_scale=dt), v)


def test_constant_forcing_on_zero_operator():
    c, dt, u0 = 2.5, 0.3, 1.25
    zero = DiscreteOperator.from_matrix(np.zeros((1, 1)))
    aug = augment_with_source(zero, Forcing.polynomial(np.ones(1), [c]), 1)
    aug.update(0.0)
    z = _exp_dt(aug, dt, 10, aug.initial(np.array([u0])))
    assert abs(z[0] - (u0 + dt * c)) < 1e-12


def test_linear_forcing_on_zero_operator():
    dt, u0 = 0.4, -0.7
    zero = DiscreteOperator.from_matrix(np.zeros((1, 1)))
    aug = augment_with_source(zero, Forcing.polynomial(np.ones(1), [0.0, 1.0]), 2)
    aug.update(0.0)
    dense = aug.to_dense()
    assert np.array_equal(dense, [[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    z = _exp_dt(aug, dt, 10, aug.initial(np.array([u0])))
    assert abs(z[0] - (u0 + dt * dt / 2)) < 1e-12
    assert np.allclose(scipy.linalg.expm(dt * dense) @ aug.initial(np.array([u0])), z, atol=1e-14)


def test_zero_forcing_decouples():
    rng = np.random.default_rng(2)
    h = -np.eye(4) + 0.3 * rng.standard_normal((4, 4))
    op = DiscreteOperator.from_matrix(h)
    aug = augment_with_source(op, Forcing.polynomial(np.zeros(4), [0.0]), 3)
    aug.update(0.0)
    u0 = rng.standard_normal(4)
    dt = 0.2
    dense = aug.to_dense()
    assert np.allclose((scipy.linalg.expm(dt * dense) @ aug.initial(u0))[:4], scipy.linalg.expm(dt * h) @ u0)


def test_polynomial_forcing_matches_ode_solution():
    rng = np.random.default_rng(3)
    n, dt, t_ref = 5, 0.25, 0.4
    h = -0.5 * np.eye(n) + 0.4 * rng.standard_normal((n, n))
    profile = rng.standard_normal(n)
    coeffs = [1.0, 2.0, -3.0]
    forcing = Forcing.polynomial(profile, coeffs)
    aug = augment_with_source(DiscreteOperator.from_matrix(h), forcing, 3)
    aug.update(t_ref)
    u0 = rng.standard_normal(n)
    eig = np.linalg.eigvals(aug.to_dense()) * dt
    e = ellipse_from_rectangle(SpectralRectangle.bounding(eig).scaled(1.2))
    z = faber_apply(aug, e, faber_coefficients(e, 40, dt_scale=dt), aug.initial(u0))
    sol = scipy.integrate.solve_ivp(lambda t, u: h @ u + forcing(t), (t_ref, t_ref + dt), u0,
                                    method="DOP853", rtol=1e-13, atol=1e-14)
    assert np.allclose(z[:n], sol.y[:, -1], rtol=0, atol=1e-10)
    assert aug.mvo == 40 and aug.base.mvo == 0


def test_expansion_order_limits():
    op = DiscreteOperator.from_matrix(np.zeros((1, 1)))
    f = Forcing.polynomial(np.ones(1), [1.0])
    with pytest.raises(ValueError):
        augment_with_source(op, f, 0)
    with pytest.raises(ValueError):
        augment_with_source(op, f, MAX_EXPANSION + 1)
    assert augment_with_source(op, f, MAX_EXPANSION).n == 1 + MAX_EXPANSION


def test_augmented_block_application():
    rng = np.random.default_rng(4)
    h = rng.standard_normal((3, 3))
    aug = augment_with_source(DiscreteOperator.from_matrix(h), Forcing.polynomial(np.ones(3), [1.0, 1.0]), 2)
    aug.update(0.5)
    block = rng.standard_normal((5, 2))
    assert np.allclose(aug(block), aug.to_dense() @ block)
    assert aug.mvo == 2

