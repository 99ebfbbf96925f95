"""Spectral rectangles of discrete wave operators.

The imaginary extent grows linearly with ``1/dx``; a line fitted to a few
coarse, densely eigensolved grids is extrapolated to the production grid.
The real extent follows from the largest damping value on the grid.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
import scipy.linalg

from .ellipse import SpectralRectangle
from .linop import DiscreteOperator
from .medium import PmlConfig
from .operators import Formulation, build_operator

DENSE_CAP = 6000
IMAG_MARGIN = 0.02
R2_WARN = 0.99


class CalibrationWarning(UserWarning):
    pass


def eigen_full(op: DiscreteOperator, cap: int = DENSE_CAP) -> np.ndarray:
    """All eigenvalues of ``op`` via a dense nonsymmetric eigensolve."""
    if op.n > cap:
        raise ValueError(f"operator size {op.n} exceeds dense cap {cap}: use calibration path")
    dense = op._matvec(np.eye(op.n))
    return scipy.linalg.eigvals(dense, overwrite_a=True, check_finite=False)


@dataclass
class ImagCalibration:
    """Line ``max|Im| = slope / dx + intercept`` for one formulation and order.

    ``c_ref`` is the maximal velocity of the calibration medium; the line
    is transferred to another medium by the ratio of maximal velocities.
    """

    formulation: str
    order: int
    slope: float
    intercept: float
    fit_r2: float
    samples: list = field(default_factory=list)  # (1/dx, max imag)
    c_ref: float = 1.0
    warning: bool = False

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("calibration slope must be positive")

    def im_max(self, dx: float, c_max: float | None = None) -> float:
        ratio = 1.0 if c_max is None else c_max / self.c_ref
        return ratio * (self.slope / dx + self.intercept)

    def rescaled(self, c_max: float) -> "ImagCalibration":
        r = c_max / self.c_ref
        return ImagCalibration(self.formulation, self.order, self.slope * r, self.intercept * r,
                               self.fit_r2, [(x, y * r) for x, y in self.samples], c_max, self.warning)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ImagCalibration":
        data = dict(data)
        data["samples"] = [tuple(s) for s in data.get("samples", [])]
        return cls(**data)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "ImagCalibration":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_line(x, y) -> tuple[float, float, float]:
    """Least-squares ``y = slope * x + intercept`` and its ``r**2``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def calibrate_imag_slope(formulation, medium, pml: PmlConfig, order: int,
                         dx_sequence, cap: int = DENSE_CAP) -> ImagCalibration:
    """Fit the largest imaginary eigenvalue part against ``1/dx``.

    ``medium`` maps ``dx`` to a :class:`MediumModel` (for instance
    ``TestCase.model``).
    """
    formulation = Formulation.parse(formulation)
    dx_sequence = list(dx_sequence)
    if len(dx_sequence) < 3:
        raise ValueError("calibration needs at least three grid spacings")
    samples = []
    c_ref = None
    for dx in dx_sequence:
        model = medium(dx)
        c_ref = model.c_max()
        eig = eigen_full(build_operator(formulation, model, pml, order), cap)
        samples.append((1.0 / dx, float(np.max(np.abs(eig.imag)))))
    slope, intercept, r2 = fit_line(*zip(*samples))
    flag = r2 < R2_WARN
    if flag:
        warnings.warn(f"imaginary-limit fit has r^2={r2:.4f}; grids may be outside the linear regime",
                      CalibrationWarning, stacklevel=2)
    return ImagCalibration(formulation.value, order, slope, intercept, r2, samples, c_ref, flag)


def real_bounds(pml: PmlConfig, dx: float, formulation) -> tuple[float, float]:
    """``(-beta_max, re_max)`` with ``re_max = 1`` for second-derivative forms, else 0."""
    formulation = Formulation.parse(formulation)
    re_max = 1.0 if formulation.second_order else 0.0
    return -pml.beta_max(dx), re_max


def spectral_rectangle(calibration: ImagCalibration, pml: PmlConfig, dx_target: float,
                       formulation, dt: float = 1.0, c_max: float | None = None,
                       margin: float = IMAG_MARGIN) -> SpectralRectangle:
    """Rectangle enclosing ``dt * sigma(H)`` on a grid of spacing ``dx_target``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    re_min, re_max = real_bounds(pml, dx_target, formulation)
    im = calibration.im_max(dx_target, c_max) * (1.0 + margin)
    return SpectralRectangle(re_min * dt, re_max * dt, max(im, 0.0) * dt)


def enclosure_atol(eigenvalues) -> float:
    """Slack for testing computed eigenvalues against a rectangle.

    A defective eigenvalue of multiplicity two (the elastic zero modes) is
    perturbed by about ``sqrt(eps) * ||H||`` in floating point.
    """
    return math.sqrt(np.finfo(float).eps) * float(np.max(np.abs(eigenvalues)))


def rectangle_encloses(rect: SpectralRectangle, eigenvalues) -> bool:
    eigenvalues = np.asarray(eigenvalues)
    return bool(np.all(rect.contains(eigenvalues, atol=enclosure_atol(eigenvalues))))


def symbol_eigenvalues(k, c, beta) -> np.ndarray:
    """Eigenvalues ``{0, -beta + i c k, -beta - i c k}`` of the continuous 1D symbol."""
    return np.array([0.0, -beta + 1j * c * k, -beta - 1j * c * k])


def default_dx_sequence(extent: float, ndim: int, n_fields: int, cap: int = DENSE_CAP,
                        count: int = 4) -> list:
    """``count`` spacings ``extent / N`` up to the largest grid that fits the dense cap."""
    n_max = int(np.floor((cap / n_fields) ** (1.0 / ndim))) + 1
    n_min = max(8, n_max // 4)
    cells = np.unique(np.round(np.geomspace(n_min, n_max, count)).astype(int))
    return [extent / n for n in cells]


def shipped_calibration(formulation, order: int) -> ImagCalibration:
    """Calibration bundled with the package for ``(formulation, order)``."""
    formulation = Formulation.parse(formulation)
    text = resources.files("faberwave").joinpath("data/calibrations.json").read_text()
    table = json.loads(text)
    key = f"{formulation.value}/{order}"
    if key not in table:
        raise KeyError(f"no bundled calibration for {key}")
    return ImagCalibration.from_dict(table[key])


# test case, scale and grid spacings used for the bundled calibrations
CALIBRATION_PLAN = {
    "acoustic1d-1sd": (3, "full", (0.105, 0.042, 0.021, 0.0105)),
    "acoustic1d-2sd": (3, "full", (0.105, 0.042, 0.021, 0.0105)),
    "acoustic2d-2sd": (5, "desk", tuple(3.2 / n for n in (8, 12, 16, 24))),
    "acoustic2d-1sd": (5, "desk", tuple(3.2 / n for n in (8, 12, 16, 20))),
    "elastic2d": (7, "desk", tuple(3.2 / n for n in (8, 10, 12, 16))),
}


def calibrate_planned(formulation, order: int, pml: PmlConfig | None = None) -> ImagCalibration:
    """Run the calibration listed in :data:`CALIBRATION_PLAN`."""
    from .testcases import build_test_case

    formulation = Formulation.parse(formulation)
    tc_id, scale, dxs = CALIBRATION_PLAN[formulation.value]
    tc = build_test_case(tc_id, scale, pml=pml)
    return calibrate_imag_slope(formulation, tc.model, tc.pml, order, dxs)


def write_calibration_table(path, orders=(4, 8)) -> dict:
    table = {}
    for name in CALIBRATION_PLAN:
        for order in orders:
            table[f"{name}/{order}"] = calibrate_planned(name, order).to_dict()
    with open(path, "w") as fh:
        json.dump(table, fh, indent=2)
    return table
