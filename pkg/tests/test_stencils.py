import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from faberwave.stencils import (CENTERED_SECOND, STAGGERED_WEIGHTS, backward, fd_derivative, forward, second,
                                second_symbol, staggered_symbol)


def _dense(fn, n_in, order):
    eye = np.eye(n_in)
    return np.column_stack([fn(eye[:, k], 0, order, 1.0) for k in range(n_in)])


@pytest.mark.parametrize("order", [4, 8])
def test_weights_are_consistent(order):
    # first moment of the staggered stencil reproduces d/dx exactly on linears
    c = STAGGERED_WEIGHTS[order]
    assert sum(ck * (2 * k + 1) for k, ck in enumerate(c)) == pytest.approx(1.0, abs=1e-15)
    h = CENTERED_SECOND[order]
    assert h[0] + 2 * h[1:].sum() == pytest.approx(0.0, abs=1e-14)
    assert 2 * sum(hk * k * k for k, hk in enumerate(h)) == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("order", [4, 8])
def test_constant_and_linear_fields(order):
    n, dx = 40, 0.1
    x = np.arange(1, n) * dx
    pad = order // 2 + 1
    assert np.allclose(forward(np.ones(n - 1), 0, order, dx)[pad:-pad], 0.0, atol=1e-12)
    assert np.allclose(forward(x, 0, order, dx)[pad:-pad], 1.0, atol=1e-12)
    xh = (np.arange(n) + 0.5) * dx
    assert np.allclose(backward(xh, 0, order, dx)[pad:-pad], 1.0, atol=1e-12)
    assert np.allclose(second(x ** 2, 0, order, dx)[pad:-pad], 2.0, atol=1e-9)


def test_eighth_order_convergence():
    errs = []
    for n in (40, 80):
        dx = 2 * math.pi / n
        x = np.arange(1, n) * dx
        xh = (np.arange(n) + 0.5) * dx
        d = forward(np.sin(x), 0, 8, dx)
        errs.append(np.max(np.abs(d - np.cos(xh))[8:-8]))
    assert 7.5 < math.log2(errs[0] / errs[1]) < 8.5


@settings(max_examples=20, deadline=None)
@given(st.integers(6, 30), st.sampled_from([4, 8]))
def test_backward_is_minus_forward_transpose(n, order):
    f = _dense(forward, n - 1, order)
    b = _dense(backward, n, order)
    assert f.shape == (n, n - 1) and b.shape == (n - 1, n)
    assert np.array_equal(b, -f.T)
    s = _dense(second, n - 1, order)
    assert np.allclose(s, s.T)


@pytest.mark.parametrize("order", [4, 8])
def test_symbols_match_fourier_modes(order):
    n, dx = 64, 0.5
    theta = 0.7
    x = np.arange(1, n) * dx
    xh = (np.arange(n) + 0.5) * dx
    u = np.exp(1j * theta * x / dx)
    d = forward(u, 0, order, dx)
    want = 1j * staggered_symbol(theta, order) / dx * np.exp(1j * theta * xh / dx)
    assert np.allclose(d[8:-8], want[8:-8], atol=1e-13)
    s = second(u, 0, order, dx)
    assert np.allclose(s[8:-8], second_symbol(theta, order) / dx ** 2 * u[8:-8], atol=1e-12)


def test_fd_derivative_dispatch():
    u = np.arange(9.0)
    assert np.array_equal(fd_derivative(u, 0, 4, "forward", 0.5), forward(u, 0, 4, 0.5))
    v = np.arange(10.0)
    assert np.array_equal(fd_derivative(v, 0, 4, "backward", 0.5), backward(v, 0, 4, 0.5))
    with pytest.raises(ValueError):
        fd_derivative(u, 0, 4, "sideways")
    with pytest.raises(ValueError):
        forward(u, 0, 6, 1.0)


def test_two_dimensional_axes():
    rng = np.random.default_rng(0)
    u = rng.standard_normal((7, 9))
    assert np.allclose(forward(u, 1, 4, 1.0), forward(u.T, 0, 4, 1.0).T)
    assert forward(u, 0, 4, 1.0).shape == (8, 9)
