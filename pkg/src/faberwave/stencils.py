"""Staggered and centered finite-difference stencils with zero ghosts.

Along one axis with ``N`` cells of width ``dx`` there are two kinds of
unknowns:

* ``node``: points ``i*dx`` for ``i = 1..N-1`` (the end nodes carry the
  zero Dirichlet condition and are not stored),
* ``half``: points ``(i+1/2)*dx`` for ``i = 0..N-1``.

``forward`` maps node -> half, ``backward`` maps half -> node.  Both use
zero samples outside the domain, so ``backward == -forward.T``.
"""

from __future__ import annotations

import numpy as np

# c_k multiplies (u[i+1+k] - u[i-k]) / dx for the derivative at i+1/2
STAGGERED_WEIGHTS = {
    4: np.array([27.0, -1.0]) / 24.0,
    8: 1225.0 / 1024.0 * np.array([1.0, -1.0 / 15.0, 1.0 / 125.0, -1.0 / 1715.0]),
}

# h_0, h_1, ...: h_0 u[i] + sum_k h_k (u[i+k] + u[i-k]), divided by dx**2
CENTERED_SECOND = {
    4: np.array([-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
    8: np.array([-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0]),
}

_PAD = 4


def _check_order(order):
    if order not in STAGGERED_WEIGHTS:
        raise ValueError(f"order must be 4 or 8, got {order}")


def _pad(field, axis, before, after):
    widths = [(0, 0)] * field.ndim
    widths[axis] = (before, after)
    return np.pad(field, widths)


def _take(arr, axis, start, stop):
    idx = [slice(None)] * arr.ndim
    idx[axis] = slice(start, stop)
    return arr[tuple(idx)]


def forward(field, axis, order, dx):
    """Derivative of a node field evaluated at the half points of ``axis``."""
    _check_order(order)
    n_cells = field.shape[axis] + 1
    # padded position K+q holds node q; nodes 0 and N (and ghosts) are zero
    p = _pad(field, axis, _PAD + 1, _PAD + 1)
    out = None
    for k, c in enumerate(STAGGERED_WEIGHTS[order]):
        term = (_take(p, axis, _PAD + 1 + k, _PAD + 1 + k + n_cells)
                - _take(p, axis, _PAD - k, _PAD - k + n_cells))
        out = c * term if out is None else out + c * term
    return out / dx


def backward(field, axis, order, dx):
    """Derivative of a half field evaluated at the interior nodes of ``axis``."""
    _check_order(order)
    n_cells = field.shape[axis]
    # padded position K+s holds half point s
    q = _pad(field, axis, _PAD, _PAD)
    out = None
    for k, c in enumerate(STAGGERED_WEIGHTS[order]):
        term = (_take(q, axis, _PAD + 1 + k, _PAD + n_cells + k)
                - _take(q, axis, _PAD - k, _PAD - k + n_cells - 1))
        out = c * term if out is None else out + c * term
    return out / dx


def second(field, axis, order, dx):
    """Centered second derivative of a node field at the nodes."""
    _check_order(order)
    n_nodes = field.shape[axis]
    h = CENTERED_SECOND[order]
    p = _pad(field, axis, _PAD, _PAD)
    out = h[0] * field
    for k in range(1, len(h)):
        out = out + h[k] * (_take(p, axis, _PAD + k, _PAD + k + n_nodes)
                            + _take(p, axis, _PAD - k, _PAD - k + n_nodes))
    return out / (dx * dx)


def fd_derivative(field, axis, order, stagger_direction, dx=1.0):
    """First derivative on the staggered grid.

    ``stagger_direction`` is ``"forward"`` (node -> half) or ``"backward"``
    (half -> node).
    """
    if stagger_direction == "forward":
        return forward(field, axis, order, dx)
    if stagger_direction == "backward":
        return backward(field, axis, order, dx)
    raise ValueError(f"unknown stagger direction {stagger_direction!r}")


def staggered_symbol(theta, order):
    """``s(theta)`` with ``D`` acting on ``exp(i k x)`` as ``i s(theta) / dx``."""
    theta = np.asarray(theta, dtype=float)
    c = STAGGERED_WEIGHTS[order]
    return 2.0 * sum(ck * np.sin((k + 0.5) * theta) for k, ck in enumerate(c))


def second_symbol(theta, order):
    """``h(theta)``: the centered second derivative acts as ``h / dx**2``."""
    theta = np.asarray(theta, dtype=float)
    h = CENTERED_SECOND[order]
    return h[0] + 2.0 * sum(h[k] * np.cos(k * theta) for k in range(1, len(h)))
