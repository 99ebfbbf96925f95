"""The seven benchmark configurations, at full or desk scale.

Desk scale keeps ``dx``, the PML and all velocities, and shrinks the
physical region four times: a coordinate ``p`` inside it maps to
``delta + (p - delta) / 4``.  A full 8 km square becomes 3.2 km.  Times
shrink by the same factor so waves cover the same share of the region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .medium import MediumModel, PmlConfig
from .operators import Formulation
from .sources import RickerSource, mollifier

DESK_FACTOR = 4.0
DEFAULT_DX = {1: 0.0025, 2: 0.02}
BUMP_RADIUS = 0.01


@dataclass
class TestCase:
    id: int
    extents: tuple
    formulations: tuple
    description: dict  # piecewise-constant medium, see MediumModel.from_description
    pml: PmlConfig
    dx: float
    final_time: float
    initial: Callable | None = None  # coords -> displacement at t=0
    source: RickerSource | None = None
    scale: str = "desk"
    snapshot_times: tuple = ()
    notes: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def ndim(self) -> int:
        return len(self.extents)

    @property
    def formulation(self) -> Formulation:
        return self.formulations[0]

    def model(self, dx: float | None = None) -> MediumModel:
        return MediumModel.from_description(self.description, self.dx if dx is None else dx)

    def physical_box(self) -> list:
        d = self.pml.delta
        return [(d, e - d) for e in self.extents]


def _mapper(scale):
    if scale == "full":
        return lambda p, delta: p
    if scale == "desk":
        return lambda p, delta: delta + (p - delta) / DESK_FACTOR
    raise ValueError(f"scale must be 'desk' or 'full', got {scale!r}")


def _extent(length, delta, scale):
    if scale == "full":
        return length
    return 2 * delta + (length - 2 * delta) / DESK_FACTOR


def _bump(center):
    def u0(*coords):
        r2 = sum((c - x0) ** 2 for c, x0 in zip(coords, center))
        return mollifier(np.sqrt(r2), BUMP_RADIUS)
    return u0


def build_test_case(tc_id: int, scale: str = "desk", dx: float | None = None,
                    pml: PmlConfig | None = None) -> TestCase:
    """Configuration of benchmark ``tc_id`` (1..7)."""
    pml = pml or PmlConfig()
    if tc_id not in range(1, 8):
        raise ValueError(f"unknown test case {tc_id}; choose 1..7")
    mp = _mapper(scale)
    delta = pml.delta
    tf = 1.0 if scale == "full" else 1.0 / DESK_FACTOR
    acoustic_1d = (Formulation.ACOUSTIC1D_1SD, Formulation.ACOUSTIC1D_2SD)
    acoustic_2d = (Formulation.ACOUSTIC2D_2SD, Formulation.ACOUSTIC2D_1SD)

    if tc_id <= 3:
        length = _extent(10.5, delta, scale)
        ext = (length,)
        grid_dx = dx or DEFAULT_DX[1]
        mid, x7, xs = mp(5.25, delta), mp(7.0, delta), mp(2.6, delta)
        common = dict(extents=ext, formulations=acoustic_1d, pml=pml, dx=grid_dx,
                      final_time=1.0 * tf, scale=scale)
        if tc_id == 1:
            def u0(x):
                s = 10.0 * ((x - mid) * (DESK_FACTOR if scale == "desk" else 1.0)) ** 2
                return (1.0 - s) * np.exp(-s)
            return TestCase(1, description={"extents": ext, "background": {"c": 1.524}},
                            initial=u0, notes={"center": mid}, **common)
        if tc_id == 2:
            desc = {"extents": ext, "background": {"c": 1.524},
                    "regions": [{"box": [[mid, None]], "c": 3.048},
                                {"box": [[x7, None]], "c": 0.1524}]}
            return TestCase(2, description=desc, initial=_bump((xs,)), notes={"center": xs}, **common)
        desc = {"extents": ext, "background": {"c": 1.524},
                "regions": [{"box": [[mid, None]], "c": 3.048}]}
        return TestCase(3, description=desc, source=RickerSource((xs,)), notes={"center": xs}, **common)

    side = _extent(8.0, delta, scale)
    ext = (side, side)
    grid_dx = dx or DEFAULT_DX[2]
    center = (mp(4.0, delta), mp(2.0, delta))
    y4, y163, x6 = mp(4.0, delta), mp(16.0 / 3.0, delta), mp(6.0, delta)
    common = dict(extents=ext, pml=pml, dx=grid_dx, scale=scale, notes={"center": center})
    # y >= 4 slow layer, y < 4 fast layer; the corner block x >= 6, y <= 16/3 overrides both
    layered = [{"box": [[None, None], [y4, None]], "c": 3.0}]
    corner = [{"box": [[x6, None], [None, y163]], "c": 1.0}]

    if tc_id == 4:
        return TestCase(4, formulations=acoustic_2d, final_time=1.2 * tf,
                        description={"extents": ext, "background": {"c": 3.0}},
                        initial=_bump(center), **common)
    if tc_id == 5:
        tc = TestCase(5, formulations=acoustic_2d, final_time=1.3 * tf,
                      description={"extents": ext, "background": {"c": 6.0},
                                   "regions": layered + corner},
                      initial=_bump(center),
                      snapshot_times=tuple(t * tf for t in (0.3, 0.6, 0.9, 1.2)), **common)
        tc.notes["line_x"] = mp(7.0, delta)
        return tc
    if tc_id == 6:
        return TestCase(6, formulations=acoustic_2d, final_time=1.2 * tf,
                        description={"extents": ext, "background": {"c": 6.0}, "regions": layered},
                        source=RickerSource(center), **common)
    desc = {"extents": ext, "background": {"rho": 0.25, "mu": 1.5, "lam": 12.0},
            "regions": [{"box": [[None, None], [y4, None]], "mu": 1.0, "lam": 8.0},
                        {"box": [[x6, None], [None, y163]], "mu": 2.25, "lam": 18.0}]}
    return TestCase(7, formulations=(Formulation.ELASTIC2D,), final_time=1.2 * tf,
                    description=desc, source=RickerSource(center), **common)


def reference_dt(tc: TestCase, dx: float | None = None) -> float:
    """``dx / (8 c_max)``, the step of the reference integrator."""
    model = tc.model(dx)
    return model.dx / (8.0 * model.c_max())


def steps_for(final_time: float, dt: float) -> int:
    return max(1, math.ceil(final_time / dt - 1e-9))
