"""Matrix-free PML wave operators on staggered grids.

Every formulation is written as ``d/dt state = H state``; the source term
is kept out of ``H`` and handled by :mod:`faberwave.sources`.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

import numpy as np

from .linop import DiscreteOperator
from .medium import MediumModel, PmlConfig, check_pml, damping_profile
from .stencils import backward, forward, second


class Formulation(enum.Enum):
    ACOUSTIC1D_1SD = "acoustic1d-1sd"
    ACOUSTIC1D_2SD = "acoustic1d-2sd"
    ACOUSTIC2D_1SD = "acoustic2d-1sd"
    ACOUSTIC2D_2SD = "acoustic2d-2sd"
    ELASTIC2D = "elastic2d"

    @classmethod
    def parse(cls, text) -> "Formulation":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("_", "-")
        for f in cls:
            if f.value == key or f.name.lower().replace("_", "-") == key:
                return f
        raise ValueError(f"unknown formulation {text!r}; choose from "
                         + ", ".join(f.value for f in cls))

    @property
    def ndim(self) -> int:
        return 1 if self in (Formulation.ACOUSTIC1D_1SD, Formulation.ACOUSTIC1D_2SD) else 2

    @property
    def first_order(self) -> bool:
        """True for the formulations that only use first derivatives."""
        return self in (Formulation.ACOUSTIC1D_1SD, Formulation.ACOUSTIC2D_1SD)

    @property
    def second_order(self) -> bool:
        return self in (Formulation.ACOUSTIC1D_2SD, Formulation.ACOUSTIC2D_2SD)

    @property
    def elastic(self) -> bool:
        return self is Formulation.ELASTIC2D


N, H = "node", "half"

# field name -> per-axis position kind
FIELD_KINDS = {
    Formulation.ACOUSTIC1D_2SD: {"u": (N,), "v": (N,), "w": (H,)},
    Formulation.ACOUSTIC1D_1SD: {"u": (N,), "v": (H,), "w": (N,)},
    Formulation.ACOUSTIC2D_2SD: {"u": (N, N), "v": (N, N), "w_x": (H, N), "w_y": (N, H)},
    Formulation.ACOUSTIC2D_1SD: {"u": (N, N), "v_x": (H, N), "v_y": (N, H),
                                 "w_x": (N, N), "w_y": (N, N)},
    Formulation.ELASTIC2D: {
        "u_x": (N, N), "u_y": (H, H), "v_x": (N, N), "v_y": (H, H),
        "T_xx": (H, N), "T_xy": (N, H), "T_yy": (H, N),
        "w_xx": (H, N), "w_xy": (N, H), "w_yx": (N, H), "w_yy": (H, N),
    },
}

DISPLACEMENT_FIELDS = {
    Formulation.ACOUSTIC1D_2SD: ("u",), Formulation.ACOUSTIC1D_1SD: ("u",),
    Formulation.ACOUSTIC2D_2SD: ("u",), Formulation.ACOUSTIC2D_1SD: ("u",),
    Formulation.ELASTIC2D: ("u_x", "u_y"),
}


@dataclass(frozen=True)
class StateLayout:
    """Field-major, row-major flattening of the staggered unknowns."""

    names: tuple
    shapes: tuple
    kinds: tuple

    @classmethod
    def for_model(cls, formulation: Formulation, model: MediumModel) -> "StateLayout":
        names, shapes, kinds = [], [], []
        for name, kind in FIELD_KINDS[formulation].items():
            shape = tuple(model.cells[a] - 1 if k == N else model.cells[a]
                          for a, k in enumerate(kind))
            names.append(name)
            shapes.append(shape)
            kinds.append(kind)
        return cls(tuple(names), tuple(shapes), tuple(kinds))

    @property
    def sizes(self) -> tuple:
        return tuple(int(np.prod(s)) for s in self.shapes)

    @property
    def offsets(self) -> tuple:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.sizes)]))

    @property
    def n(self) -> int:
        return self.offsets[-1]

    def slice_of(self, name: str) -> slice:
        k = self.names.index(name)
        return slice(self.offsets[k], self.offsets[k + 1])

    def split(self, vec: np.ndarray) -> dict:
        """Views of ``vec`` reshaped per field (no copies)."""
        off = self.offsets
        return {name: vec[off[k]:off[k + 1]].reshape(self.shapes[k])
                for k, name in enumerate(self.names)}

    def pack(self, parts: dict, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.zeros(self.n)
        off = self.offsets
        for k, name in enumerate(self.names):
            if name in parts:
                out[off[k]:off[k + 1]] = np.ravel(parts[name])
            else:
                out[off[k]:off[k + 1]] = 0.0
        return out

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n)

    def coords(self, name: str, model: MediumModel) -> list:
        """Coordinate arrays (meshgrid, ``ij``) of the unknowns of ``name``."""
        kind = self.kinds[self.names.index(name)]
        axes = [model.node_coords(a) if k == N else model.half_coords(a)
                for a, k in enumerate(kind)]
        return np.meshgrid(*axes, indexing="ij")


def _beta(model, pml, kinds, axis):
    """Damping along ``axis`` at unknowns with position ``kinds``, broadcastable."""
    coord = model.node_coords(axis) if kinds[axis] == N else model.half_coords(axis)
    beta = damping_profile(coord, model.extents[axis], pml)
    shape = [1] * len(kinds)
    shape[axis] = beta.size
    return beta.reshape(shape)


def _acoustic1d_2sd(model, pml, order):
    dx = model.dx
    c2 = model.at("c", (N,)) ** 2
    beta_n = _beta(model, pml, (N,), 0)
    beta_h = _beta(model, pml, (H,), 0)

    def rhs(s, out):
        u, v, w = s["u"], s["v"], s["w"]
        out["u"][...] = v
        out["v"][...] = -beta_n * v + c2 * (second(u, 0, order, dx) + backward(w, 0, order, dx))
        out["w"][...] = -beta_h * (w + forward(u, 0, order, dx))
    return rhs


def _acoustic1d_1sd(model, pml, order):
    dx = model.dx
    c2 = model.at("c", (N,)) ** 2
    beta_n = _beta(model, pml, (N,), 0)
    beta_h = _beta(model, pml, (H,), 0)

    def rhs(s, out):
        u, v, w = s["u"], s["v"], s["w"]
        dv = backward(v, 0, order, dx)
        out["u"][...] = c2 * (dv - w)
        out["v"][...] = -beta_h * v + forward(u, 0, order, dx)
        out["w"][...] = beta_n * (dv - w)
    return rhs


def _acoustic2d_2sd(model, pml, order):
    dx = model.dx
    c2 = model.at("c", (N, N)) ** 2
    bx_nn, by_nn = _beta(model, pml, (N, N), 0), _beta(model, pml, (N, N), 1)
    bx_hn, by_hn = _beta(model, pml, (H, N), 0), _beta(model, pml, (H, N), 1)
    bx_nh, by_nh = _beta(model, pml, (N, H), 0), _beta(model, pml, (N, H), 1)
    bsum = bx_nn + by_nn
    bprod = bx_nn * by_nn

    def rhs(s, out):
        u, v, wx, wy = s["u"], s["v"], s["w_x"], s["w_y"]
        out["u"][...] = v
        lap = (second(u, 0, order, dx) + second(u, 1, order, dx)
               + backward(wx, 0, order, dx) + backward(wy, 1, order, dx))
        out["v"][...] = -bsum * v - bprod * u + c2 * lap
        out["w_x"][...] = -bx_hn * wx + (by_hn - bx_hn) * forward(u, 0, order, dx)
        out["w_y"][...] = -by_nh * wy + (bx_nh - by_nh) * forward(u, 1, order, dx)
    return rhs


def _acoustic2d_1sd(model, pml, order):
    dx = model.dx
    c2 = model.at("c", (N, N)) ** 2
    bx_nn, by_nn = _beta(model, pml, (N, N), 0), _beta(model, pml, (N, N), 1)
    bx_hn = _beta(model, pml, (H, N), 0)
    by_nh = _beta(model, pml, (N, H), 1)

    def rhs(s, out):
        u, vx, vy, wx, wy = s["u"], s["v_x"], s["v_y"], s["w_x"], s["w_y"]
        dvx = backward(vx, 0, order, dx)
        dvy = backward(vy, 1, order, dx)
        out["u"][...] = c2 * (dvx + dvy - wx - wy)
        out["v_x"][...] = -bx_hn * vx + forward(u, 0, order, dx)
        out["v_y"][...] = -by_nh * vy + forward(u, 1, order, dx)
        out["w_x"][...] = bx_nn * (dvx - wx)
        out["w_y"][...] = by_nn * (dvy - wy)
    return rhs


def _elastic2d(model, pml, order):
    dx = model.dx
    inv_rho_nn = 1.0 / model.at("rho", (N, N))
    inv_rho_hh = 1.0 / model.at("rho", (H, H))
    mu_hn, lam_hn = model.at("mu", (H, N)), model.at("lam", (H, N))
    mu_nh = model.at("mu", (N, H))
    p_hn = 2.0 * mu_hn + lam_hn
    b = {kind: (_beta(model, pml, kind, 0), _beta(model, pml, kind, 1))
         for kind in ((N, N), (H, H), (H, N), (N, H))}
    bx_nn, by_nn = b[(N, N)]
    bx_hh, by_hh = b[(H, H)]
    bx_hn, by_hn = b[(H, N)]
    bx_nh, by_nh = b[(N, H)]

    def rhs(s, out):
        ux, uy, vx, vy = s["u_x"], s["u_y"], s["v_x"], s["v_y"]
        txx, txy, tyy = s["T_xx"], s["T_xy"], s["T_yy"]
        wxx, wxy, wyx, wyy = s["w_xx"], s["w_xy"], s["w_yx"], s["w_yy"]
        out["u_x"][...] = vx
        out["u_y"][...] = vy
        out["v_x"][...] = (-(bx_nn + by_nn) * vx - bx_nn * by_nn * ux
                           + inv_rho_nn * (backward(txx + wxx, 0, order, dx)
                                           + backward(txy + wxy, 1, order, dx)))
        out["v_y"][...] = (-(bx_hh + by_hh) * vy - bx_hh * by_hh * uy
                           + inv_rho_hh * (forward(txy + wyx, 0, order, dx)
                                           + forward(tyy + wyy, 1, order, dx)))
        dvx_x = forward(vx, 0, order, dx)     # (H, N)
        dvy_y = backward(vy, 1, order, dx)    # (H, N)
        out["T_xx"][...] = p_hn * dvx_x + lam_hn * dvy_y
        out["T_yy"][...] = lam_hn * dvx_x + p_hn * dvy_y
        out["T_xy"][...] = mu_nh * (forward(vx, 1, order, dx) + backward(vy, 0, order, dx))
        out["w_xx"][...] = -bx_hn * wxx + (by_hn - bx_hn) * p_hn * forward(ux, 0, order, dx)
        out["w_xy"][...] = -by_nh * wxy + (bx_nh - by_nh) * mu_nh * forward(ux, 1, order, dx)
        out["w_yx"][...] = -bx_nh * wyx + (by_nh - bx_nh) * mu_nh * backward(uy, 0, order, dx)
        out["w_yy"][...] = -by_hn * wyy + (bx_hn - by_hn) * p_hn * backward(uy, 1, order, dx)
    return rhs


_BUILDERS = {
    Formulation.ACOUSTIC1D_2SD: _acoustic1d_2sd,
    Formulation.ACOUSTIC1D_1SD: _acoustic1d_1sd,
    Formulation.ACOUSTIC2D_2SD: _acoustic2d_2sd,
    Formulation.ACOUSTIC2D_1SD: _acoustic2d_1sd,
    Formulation.ELASTIC2D: _elastic2d,
}


def _fingerprint(formulation, model, pml, order):
    h = hashlib.sha1()
    h.update(f"{formulation.value}|{order}|{model.extents}|{model.dx}|{pml}".encode())
    for name in sorted(model.fields):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.fields[name]).tobytes())
    return h.hexdigest()


def build_operator(formulation, model: MediumModel, pml: PmlConfig, order: int = 4) -> DiscreteOperator:
    """Right-hand-side operator ``H`` of a PML wave formulation (no source)."""
    formulation = Formulation.parse(formulation)
    if order not in (4, 8):
        raise ValueError("order must be 4 or 8")
    if model.ndim != formulation.ndim:
        raise ValueError(f"{formulation.value} needs a {formulation.ndim}D medium")
    if formulation.elastic != model.elastic:
        raise ValueError("material fields do not match the formulation")
    check_pml(model, pml)
    layout = StateLayout.for_model(formulation, model)
    rhs = _BUILDERS[formulation](model, pml, order)

    def matvec(vec):
        if vec.ndim == 2:
            return np.column_stack([matvec(col) for col in vec.T])
        out = np.empty(layout.n, dtype=np.result_type(vec.dtype, float))
        rhs(layout.split(vec), layout.split(out))
        return out

    meta = {"formulation": formulation, "order": order, "model": model, "pml": pml,
            "layout": layout, "fingerprint": _fingerprint(formulation, model, pml, order)}
    return DiscreteOperator(layout.n, matvec, meta=meta)
