"""Media, grids and PML damping profiles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _cells(length, dx):
    n = length / dx
    n_int = int(round(n))
    if n_int < 2 or abs(n - n_int) > 1e-9 * max(1.0, n):
        raise ValueError(f"extent {length} is not an integer multiple of dx={dx}")
    return n_int


@dataclass(frozen=True)
class PmlConfig:
    delta: float = 0.8
    beta0: float = 30.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("PML thickness must be positive")
        if self.beta0 < 0:
            raise ValueError("beta0 must be non-negative")

    def beta_max(self, dx: float) -> float:
        """Largest damping seen by any unknown (half a cell inside the edge)."""
        if dx >= 2 * self.delta:
            raise ValueError("dx must be smaller than twice the layer thickness")
        return self.beta0 * ((self.delta - 0.5 * dx) / self.delta) ** 2


def damping_profile(pos, length: float, pml: PmlConfig):
    """``beta0 * (dist(pos, physical region) / delta)**2`` on ``[0, length]``."""
    pos = np.asarray(pos, dtype=float)
    dist = np.maximum(0.0, np.maximum(pml.delta - pos, pos - (length - pml.delta)))
    return pml.beta0 * (dist / pml.delta) ** 2


@dataclass
class MediumModel:
    """Material fields sampled on the full node grid (boundary nodes included).

    ``fields`` maps names to arrays of shape ``(Nx+1,)`` or ``(Nx+1, Ny+1)``;
    acoustic media carry ``c``, elastic media ``rho``, ``mu``, ``lam``.
    """

    extents: tuple
    dx: float
    fields: dict = field(default_factory=dict)

    def __post_init__(self):
        self.extents = tuple(float(e) for e in self.extents)
        self.cells = tuple(_cells(e, self.dx) for e in self.extents)
        want = tuple(n + 1 for n in self.cells)
        for name, arr in self.fields.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != want:
                raise ValueError(f"field {name} has shape {arr.shape}, expected {want}")
            if not np.all(arr > 0):
                raise ValueError(f"material field {name} must be strictly positive")
            self.fields[name] = arr

    @property
    def ndim(self) -> int:
        return len(self.extents)

    @property
    def elastic(self) -> bool:
        return "rho" in self.fields

    def node_coords(self, axis: int, interior: bool = True) -> np.ndarray:
        n = self.cells[axis]
        idx = np.arange(1, n) if interior else np.arange(n + 1)
        return idx * self.dx

    def half_coords(self, axis: int) -> np.ndarray:
        return (np.arange(self.cells[axis]) + 0.5) * self.dx

    def c_max(self) -> float:
        if self.elastic:
            f = self.fields
            return float(np.max(np.sqrt((f["lam"] + 2 * f["mu"]) / f["rho"])))
        return float(np.max(self.fields["c"]))

    def scaled(self, factor: float) -> "MediumModel":
        """Velocity scaled by ``factor`` (elastic: moduli by ``factor**2``)."""
        f = dict(self.fields)
        if self.elastic:
            f["mu"] = f["mu"] * factor ** 2
            f["lam"] = f["lam"] * factor ** 2
        else:
            f["c"] = f["c"] * factor
        return MediumModel(self.extents, self.dx, f)

    @classmethod
    def from_function(cls, extents, dx, **funcs) -> "MediumModel":
        """Sample ``name=callable(x[, y])`` on the node grid."""
        extents = tuple(extents)
        axes = [np.arange(_cells(e, dx) + 1) * dx for e in extents]
        grids = np.meshgrid(*axes, indexing="ij")
        fields = {}
        for name, fn in funcs.items():
            val = fn(*grids) if callable(fn) else fn
            fields[name] = np.broadcast_to(np.asarray(val, dtype=float), grids[0].shape).copy()
        return cls(extents, dx, fields)

    @classmethod
    def from_description(cls, desc: dict, dx: float | None = None) -> "MediumModel":
        """Piecewise-constant medium from a dict (or JSON) description.

        ``{"extents": [...], "dx": ..., "background": {"c": 3.0},
        "regions": [{"box": [[x0, x1], [y0, y1]], "c": 6.0}, ...]}``;
        later regions override earlier ones, boxes are closed intervals.
        """
        extents = tuple(desc["extents"])
        dx = float(dx if dx is not None else desc["dx"])
        background = desc["background"]
        regions = desc.get("regions", [])

        def make(name):
            def fn(*coords):
                out = np.full(coords[0].shape, float(background[name]))
                for reg in regions:
                    if name not in reg:
                        continue
                    mask = np.ones(coords[0].shape, dtype=bool)
                    for c, (lo, hi) in zip(coords, reg["box"]):
                        lo = -np.inf if lo is None else lo
                        hi = np.inf if hi is None else hi
                        mask &= (c >= lo) & (c <= hi)
                    out[mask] = float(reg[name])
                return out
            return fn

        return cls.from_function(extents, dx, **{name: make(name) for name in background})

    @classmethod
    def from_json(cls, path, dx: float | None = None) -> "MediumModel":
        with open(path) as fh:
            return cls.from_description(json.load(fh), dx)

    def to_raw(self, stem) -> None:
        """Write ``<stem>.<field>.bin`` (little-endian float64, row-major) and ``<stem>.json``."""
        stem = Path(stem)
        for name, arr in self.fields.items():
            np.ascontiguousarray(arr, dtype="<f8").tofile(f"{stem}.{name}.bin")
        meta = {"extents": list(self.extents), "dx": self.dx,
                "shape": list(next(iter(self.fields.values())).shape),
                "fields": sorted(self.fields)}
        Path(f"{stem}.json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def from_raw(cls, stem) -> "MediumModel":
        stem = Path(stem)
        meta = json.loads(Path(f"{stem}.json").read_text())
        shape = tuple(meta["shape"])
        fields = {name: np.fromfile(f"{stem}.{name}.bin", dtype="<f8").reshape(shape)
                  for name in meta["fields"]}
        return cls(tuple(meta["extents"]), float(meta["dx"]), fields)

    # -- material values at staggered positions -------------------------------

    def at(self, name: str, kinds: tuple) -> np.ndarray:
        """Field ``name`` at interior unknowns of the given per-axis kinds.

        ``kinds`` holds ``"node"`` or ``"half"`` per axis; half positions use
        the arithmetic mean of the two neighbouring nodes.
        """
        arr = self.fields[name]
        for axis, kind in enumerate(kinds):
            n = arr.shape[axis]
            if kind == "node":
                arr = np.take(arr, np.arange(1, n - 1), axis=axis)
            elif kind == "half":
                arr = 0.5 * (np.take(arr, np.arange(0, n - 1), axis=axis)
                             + np.take(arr, np.arange(1, n), axis=axis))
            else:
                raise ValueError(kind)
        return arr


def check_pml(model: MediumModel, pml: PmlConfig, aligned: bool = False) -> None:
    """Reject overlapping layers; with ``aligned`` also require ``delta/dx`` integral."""
    ratio = pml.delta / model.dx
    if aligned and abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ValueError(f"PML thickness {pml.delta} is not a multiple of dx={model.dx}")
    if model.dx >= pml.delta:
        raise ValueError("dx must be smaller than the PML thickness")
    if any(2 * pml.delta >= e for e in model.extents):
        raise ValueError("PML layers overlap: domain too small for delta")
    if not math.isfinite(model.dx) or model.dx <= 0:
        raise ValueError("dx must be positive")
