import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
import scipy.special
from hypothesis import given, settings, strategies as st

from faberwave.bounds import EXPERIMENT_RANGES, normal_matrix_experiment, proposed_bound, sample_normal_matrix
from faberwave.ellipse import EllipseParams, SpectralRectangle, ellipse_from_rectangle
from faberwave.faber import (SeriesDivergedError, faber_apply, faber_coefficients, faber_partial_sums,
                             faber_scalar_eval, scaling_squaring_apply, write_coefficients_csv)
from faberwave.linop import DiscreteOperator


def _quad_coefficient(e, j):
    """j-th Fourier coefficient of exp(psi(w)) on |w| = 1 by adaptive quadrature."""
    def integrand(t):
        w = np.exp(1j * t)
        return (np.exp(e.d + e.gamma * w + 0.5 * (e.a - e.b) / w) * np.exp(-1j * j * t)).real
    val, _ = scipy.integrate.quad(integrand, 0, 2 * math.pi, limit=400, epsabs=1e-15, epsrel=1e-13)
    return val / (2 * math.pi)


def test_circle_coefficients_are_taylor():
    c = faber_coefficients(EllipseParams(0.0, 1.0, 1.0), 5).values
    assert np.allclose(c, [1 / math.factorial(j) for j in range(6)], rtol=1e-13, atol=0)
    g = 2.5
    c = faber_coefficients(EllipseParams(0.0, g, g), 12).values
    assert np.allclose(c, [g ** j / math.factorial(j) for j in range(13)], rtol=0, atol=1e-14)


@pytest.mark.parametrize("d,a", [(0.0, 1.0), (-3.0, 7.5), (2.0, 20.0)])
def test_real_segment_coefficients_are_bessel_i(d, a):
    c = faber_coefficients(EllipseParams(d, a, 0.0), 40).values
    want = math.exp(d) * scipy.special.iv(np.arange(41), a)
    big = want > 1e-250
    assert np.allclose(c[big], want[big], rtol=1e-10, atol=1e-15 * want.max())


@pytest.mark.parametrize("b", [1.0, 9.0, 30.0])
def test_vertical_segment_coefficients_are_bessel_j(b):
    c = faber_coefficients(EllipseParams(0.0, 0.0, b), 60).values
    want = scipy.special.jv(np.arange(61), b)
    assert np.allclose(c, want, rtol=0, atol=1e-13)


@pytest.mark.parametrize("d,a,b", [(1.0, 2.0, 1.0), (-2.0, 1.0, 4.0), (6.8, 4.4, 3.6)])
def test_coefficients_match_quadrature(d, a, b):
    e = EllipseParams(d, a, b)
    c = faber_coefficients(e, 15).values
    want = np.array([_quad_coefficient(e, j) for j in range(16)])
    assert np.allclose(c, want, rtol=1e-9, atol=1e-13 * np.abs(want).max())


def test_point_limit():
    c = faber_coefficients(EllipseParams(3.0, 1e-9, 1e-9), 4).values
    assert c[0] == pytest.approx(math.exp(3.0), rel=1e-8)
    assert np.all(np.abs(c[1:]) < 1e-7)


def test_coefficients_length_real_and_readonly():
    co = faber_coefficients(EllipseParams(6.8, 4.4, 3.6), 30)
    assert len(co) == 31 and co.values.dtype == float
    with pytest.raises(ValueError):
        co.values[0] = 1.0
    with pytest.raises(ValueError):
        faber_coefficients(EllipseParams(0.0, 1.0, 1.0), -1)


def test_tail_decays_past_twice_capacity():
    e = EllipseParams(6.8, 4.4, 3.6)
    c = np.abs(faber_coefficients(e, 60).values)
    start = int(math.ceil(2 * e.gamma))
    tail = c[start:]
    tail = tail[tail > 1e-280]
    assert np.all(np.diff(tail) < 0)


def test_scalar_faber_polynomials():
    e = EllipseParams(2.0, 3.0, 1.0)
    assert faber_scalar_eval(0, 1.7 + 2j, e) == 1
    assert faber_scalar_eval(1, e.d, e) == 0
    z = e.d + e.a
    f1 = z / e.gamma - e.c0
    f2 = f1 * f1 - 2 * e.c1
    f3 = f1 * f2 - e.c1 * f1
    assert faber_scalar_eval(3, z, e) == pytest.approx(f3, rel=1e-14)
    # F_j on a real segment are twice the Chebyshev polynomials
    seg = EllipseParams(0.0, 1.0, 0.0)
    x = np.linspace(-1, 1, 11)
    for j in range(1, 8):
        assert np.allclose(faber_scalar_eval(j, x, seg).real, 2 * scipy.special.eval_chebyt(j, x))


def _op(matrix):
    return DiscreteOperator.from_matrix(matrix)


def test_scalar_operator_exponential():
    e = EllipseParams(-0.3, 0.5, 0.2)
    coeffs = faber_coefficients(e, 20)
    v = np.array([1.7])
    out = faber_apply(_op(np.array([[-0.3]])), e, coeffs, v)
    assert abs(out[0] / (v[0] * math.exp(-0.3)) - 1) < 1e-12


def test_degree_zero_is_leading_coefficient():
    e = EllipseParams(0.5, 1.0, 2.0)
    coeffs = faber_coefficients(e, 0)
    v = np.arange(3.0)
    op = _op(np.diag([0.1, 0.2, 0.3]))
    assert np.array_equal(faber_apply(op, e, coeffs, v), coeffs.values[0] * v)
    assert op.mvo == 0


def test_apply_counts_exactly_m_products_and_matches_expm():
    rng = np.random.default_rng(3)
    h, eig, exact = sample_normal_matrix(4, 16, (-2.0, 0.0), ((-2.0, 0.0), (-3.0, 3.0)), rng)
    e = ellipse_from_rectangle(SpectralRectangle.bounding(eig))
    op = _op(h)
    v = rng.standard_normal(20)
    out = faber_apply(op, e, faber_coefficients(e, 40), v)
    assert op.mvo == 40
    assert np.linalg.norm(out - scipy.linalg.expm(h) @ v) < 1e-12 * np.linalg.norm(v)


def test_dt_scale_folds_time_step():
    rng = np.random.default_rng(4)
    h, eig, _ = sample_normal_matrix(2, 8, (-1.0, 0.0), ((-1.0, 0.0), (-2.0, 2.0)), rng)
    dt = 0.37
    e = ellipse_from_rectangle(SpectralRectangle.bounding(eig * dt))
    v = rng.standard_normal(10)
    out = faber_apply(_op(h), e, faber_coefficients(e, 30, dt_scale=dt), v)
    assert np.allclose(out, scipy.linalg.expm(dt * h) @ v, rtol=0, atol=1e-13)


def test_mismatched_ellipse_rejected():
    e1, e2 = EllipseParams(0, 1, 1), EllipseParams(0, 2, 1)
    with pytest.raises(ValueError):
        faber_apply(_op(np.eye(2)), e2, faber_coefficients(e1, 4), np.ones(2))


def test_divergence_detected():
    e = EllipseParams(0.0, 1.0, 1.0)
    with pytest.raises(SeriesDivergedError):
        faber_apply(_op(np.array([[1e200]])), e, faber_coefficients(e, 3), np.ones(1))


def test_partial_sums_agree_with_apply():
    rng = np.random.default_rng(5)
    h = rng.standard_normal((6, 6)) * 0.3
    e = ellipse_from_rectangle(SpectralRectangle.bounding(np.linalg.eigvals(h)).scaled(1.2))
    v = rng.standard_normal(6)
    sums = dict(faber_partial_sums(h, e, 12))
    for m in (0, 1, 2, 7, 12):
        assert np.allclose(sums[m] @ v, faber_apply(_op(h), e, faber_coefficients(e, m), v), atol=1e-13)


def test_experiment_matrix_error_below_proposed_bound():
    rng = np.random.default_rng(0)
    h, eig, exact = sample_normal_matrix(10, 50, **EXPERIMENT_RANGES[1], rng=rng)
    e = ellipse_from_rectangle(SpectralRectangle.bounding(eig))
    v = rng.standard_normal(60)
    v /= np.linalg.norm(v)
    out = faber_apply(_op(h), e, faber_coefficients(e, 30), v)
    bound, _ = proposed_bound(e, 30, 1e-14)
    assert np.linalg.norm(out - exact @ v) <= bound


def test_scaling_and_squaring():
    e = EllipseParams(1.0, 0.5, 0.5)
    v = np.array([1.0])
    op = _op(np.array([[2.0]]))
    out = scaling_squaring_apply(op, e, 20, 2, v)
    assert abs(out[0] / math.e ** 2 - 1) < 1e-12
    rng = np.random.default_rng(6)
    h = rng.standard_normal((5, 5)) * 0.2
    e1 = ellipse_from_rectangle(SpectralRectangle.bounding(np.linalg.eigvals(h)).scaled(1.1))
    w = rng.standard_normal(5)
    assert np.array_equal(scaling_squaring_apply(_op(h), e1, 15, 1, w),
                          faber_apply(_op(h), e1, faber_coefficients(e1, 15), w))
    with pytest.raises(ValueError):
        scaling_squaring_apply(op, e, 5, 0, v)


def test_scaling_and_squaring_equal_cost():
    report = normal_matrix_experiment(seed=1, degrees=[1])
    rng = np.random.default_rng(1)
    h, eig, exact = sample_normal_matrix(10, 50, **EXPERIMENT_RANGES[1], rng=rng)
    assert np.allclose(eig, report.eigenvalues)
    rect = SpectralRectangle.bounding(eig)
    v = rng.standard_normal(60)
    want = exact @ v
    one = faber_apply(_op(h), ellipse_from_rectangle(rect), faber_coefficients(ellipse_from_rectangle(rect), 60), v)
    e4 = ellipse_from_rectangle(rect.scaled(0.25))
    four = scaling_squaring_apply(_op(h), e4, 15, 4, v)
    for out in (one, four):
        assert np.linalg.norm(out - want) / np.linalg.norm(want) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_series_converges_to_exp_inside_ellipse(d, a, b, r, t):
    e = EllipseParams(d, a, b)
    z = d + r * (a * math.cos(t) + 1j * b * math.sin(t))
    c = faber_coefficients(e, 50).values
    s = sum(c[j] * faber_scalar_eval(j, z, e) for j in range(51))
    assert abs(s - np.exp(z)) <= 1e-11 * max(1.0, math.exp(d + a))


def test_coefficients_csv(tmp_path):
    co = faber_coefficients(EllipseParams(0.0, 1.0, 1.0), 3)
    path = tmp_path / "c.csv"
    write_coefficients_csv(co, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "j,re,im" and len(rows) == 5
    assert float(rows[3].split(",")[1]) == pytest.approx(0.5)
