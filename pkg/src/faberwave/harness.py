"""Reference and Faber propagation runs, errors and step-size scans."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as dop

from .ellipse import ellipse_from_rectangle
from .faber import SeriesDivergedError, faber_apply, faber_coefficients
from .linop import DiscreteOperator
from .operators import DISPLACEMENT_FIELDS, Formulation, build_operator
from .sources import MAX_EXPANSION, Forcing, RickerSource, augment_with_source
from .spectrum import ImagCalibration, shipped_calibration, spectral_rectangle
from .testcases import TestCase, reference_dt

GROWTH_LIMIT = 1e6

# field receiving the forcing term, per formulation
SOURCE_FIELDS = {
    Formulation.ACOUSTIC1D_2SD: ("v",), Formulation.ACOUSTIC2D_2SD: ("v",),
    Formulation.ACOUSTIC1D_1SD: ("u",), Formulation.ACOUSTIC2D_1SD: ("u",),
    Formulation.ELASTIC2D: ("v_x", "v_y"),
}


@dataclass
class Problem:
    """One test case discretized with one formulation and stencil order."""

    tc: TestCase
    formulation: Formulation
    order: int
    op: DiscreteOperator
    u0: np.ndarray
    forcing: Forcing | None

    @property
    def model(self):
        return self.op.meta["model"]

    @property
    def layout(self):
        return self.op.meta["layout"]

    @property
    def fingerprint(self) -> str:
        return self.op.meta["fingerprint"]

    def physical_mask(self, name: str) -> np.ndarray:
        coords = self.layout.coords(name, self.model)
        mask = np.ones(coords[0].shape, dtype=bool)
        tol = 1e-9 * self.model.dx
        for c, (lo, hi) in zip(coords, self.tc.physical_box()):
            mask &= (c >= lo - tol) & (c <= hi + tol)
        return mask

    def scale(self) -> float:
        """Magnitude used to detect blow-up."""
        s = float(np.linalg.norm(self.u0))
        if self.forcing is not None:
            s += float(np.linalg.norm(self.forcing.profile)) * max(1.0, self.tc.final_time)
        return s or 1.0


def prepare(tc: TestCase, formulation=None, order: int = 4, dx: float | None = None) -> Problem:
    """Build the operator, initial state and forcing of ``tc``."""
    formulation = Formulation.parse(formulation or tc.formulation)
    if formulation not in tc.formulations:
        raise ValueError(f"test case {tc.id} does not use {formulation.value}")
    model = tc.model(dx)
    op = build_operator(formulation, model, tc.pml, order)
    layout = op.meta["layout"]
    parts = {}
    if tc.initial is not None:
        name = DISPLACEMENT_FIELDS[formulation][0]
        parts[name] = tc.initial(*layout.coords(name, model))
    u0 = layout.pack(parts)
    forcing = None
    if tc.source is not None:
        src = tc.source
        if formulation.first_order:
            src = RickerSource(src.center, src.f0, src.t0, src.radius, integrated=True)
        profile = layout.pack({name: src.spatial(layout.coords(name, model))
                               for name in SOURCE_FIELDS[formulation]})
        forcing = Forcing.from_source(profile, src)
    return Problem(tc, formulation, order, op, u0, forcing)


@dataclass
class RunResult:
    state: np.ndarray
    dt: float
    steps: int
    mvo: int
    wall: float
    method: str
    m: int = 0
    snapshots: dict = field(default_factory=dict)
    fingerprint: str = ""


def _schedule(final_time, dt, stops=()):
    """Step sizes reaching every time in ``stops`` and ``final_time`` exactly."""
    targets = sorted({float(t) for t in stops if 0 < t < final_time} | {float(final_time)})
    steps, t = [], 0.0
    for target in targets:
        n = max(1, math.ceil((target - t) / dt - 1e-9))
        full = n - 1
        steps.extend([(dt, False)] * full)
        last = target - t - full * dt
        steps.append((last, True) if abs(last - dt) > 1e-12 * dt else (dt, True))
        t = target
    return steps


def _check_growth(vec, problem):
    norm = float(np.linalg.norm(vec))
    if not math.isfinite(norm) or norm > GROWTH_LIMIT * problem.scale():
        raise SeriesDivergedError("series diverged")


# --- reference integrator ----------------------------------------------------

_RK_A = dop.A[:dop.N_STAGES, :dop.N_STAGES]
_RK_B = dop.B
_RK_C = dop.C[:dop.N_STAGES]


def reference_solve(problem: Problem, dt: float | None = None, final_time: float | None = None,
                    snapshot_times=()) -> RunResult:
    """Fixed-step explicit RK of order 8 (12 stages) on ``u' = H u + f(t)``."""
    tc = problem.tc
    dt = dt or reference_dt(tc, problem.model.dx)
    final_time = tc.final_time if final_time is None else final_time
    op, forcing = problem.op, problem.forcing
    y = problem.u0.copy()
    t = 0.0
    snaps = {}
    start_mvo, t0 = op.mvo, time.perf_counter()
    schedule = _schedule(final_time, dt, snapshot_times)
    k = np.empty((dop.N_STAGES, y.size))
    for i_step, (h, mark) in enumerate(schedule):
        for s in range(dop.N_STAGES):
            ys = y + h * (_RK_A[s, :s] @ k[:s]) if s else y
            k[s] = op.apply(ys)
            if forcing is not None:
                k[s] += forcing(t + _RK_C[s] * h)
        y = y + h * (_RK_B @ k)
        t += h
        if i_step % 64 == 0 or mark:
            _check_growth(y, problem)
        if mark and t < final_time - 1e-12:
            snaps[round(t, 12)] = y.copy()
    return RunResult(y, dt, len(schedule), op.mvo - start_mvo, time.perf_counter() - t0,
                     "reference", 0, snaps, problem.fingerprint)


# --- Faber propagation -------------------------------------------------------

def default_calibration(problem: Problem) -> ImagCalibration:
    return shipped_calibration(problem.formulation, problem.order)


def unit_rectangle(problem: Problem, calibration: ImagCalibration | None = None):
    """Spectral rectangle of ``H`` itself (``dt = 1``)."""
    cal = calibration or default_calibration(problem)
    return spectral_rectangle(cal, problem.tc.pml, problem.model.dx, problem.formulation,
                              1.0, c_max=problem.model.c_max())


def faber_solve(problem: Problem, m: int, dt: float, calibration: ImagCalibration | None = None,
                final_time: float | None = None, snapshot_times=(), p: int | None = None,
                rect=None) -> RunResult:
    """March ``u_{k+1} = S_m(dt H~) u_k`` to the final time.

    With a source the state is augmented by ``p`` (default ``min(m, 40)``)
    Taylor slots refreshed at the start of every step.
    """
    if m < 1:
        raise ValueError("degree must be at least 1")
    tc = problem.tc
    final_time = tc.final_time if final_time is None else final_time
    rect = rect or unit_rectangle(problem, calibration)
    op = problem.op
    n = op.n
    forcing = problem.forcing
    if forcing is not None:
        p = min(m, MAX_EXPANSION) if p is None else p
        aug = augment_with_source(op, forcing, p)
        state = aug.initial(problem.u0)
        tail = state[n:].copy()
        step_op = aug
    else:
        state = problem.u0.copy()
        step_op = op
    plans = {}
    snaps = {}
    start_mvo, t0 = step_op.mvo, time.perf_counter()
    t = 0.0
    schedule = _schedule(final_time, dt, snapshot_times)
    for i_step, (h, mark) in enumerate(schedule):
        if h not in plans:
            ell = ellipse_from_rectangle(rect.scaled(h))
            plans[h] = (ell, faber_coefficients(ell, m, dt_scale=h))
        ell, coeffs = plans[h]
        if forcing is not None:
            aug.update(t)
            state = faber_apply(aug, ell, coeffs, state)
            state[n:] = tail
        else:
            state = faber_apply(op, ell, coeffs, state)
        t += h
        if i_step % 16 == 0 or mark:
            _check_growth(state[:n], problem)
        if mark and t < final_time - 1e-12:
            snaps[round(t, 12)] = state[:n].copy()
    return RunResult(state[:n].copy(), dt, len(schedule), step_op.mvo - start_mvo,
                     time.perf_counter() - t0, "faber", m, snaps, problem.fingerprint)


# --- errors and scans --------------------------------------------------------

def _displacement(problem: Problem, state: np.ndarray, fields=None) -> np.ndarray:
    fields = fields or DISPLACEMENT_FIELDS[problem.formulation]
    parts = problem.layout.split(state)
    return np.concatenate([parts[f][problem.physical_mask(f)] for f in fields])


def l2_error(problem: Problem, result: RunResult, reference: RunResult, fields=None) -> float:
    """Relative L2 difference of the displacement over the physical region."""
    for r in (result, reference):
        if r.state.shape != (problem.op.n,) or (r.fingerprint and r.fingerprint != problem.fingerprint):
            raise ValueError("layout mismatch between run and problem")
    a = _displacement(problem, result.state, fields)
    b = _displacement(problem, reference.state, fields)
    ref = np.linalg.norm(b)
    if ref == 0:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a - b) / ref)


def _error_at(problem, m, dt, reference, calibration):
    try:
        run = faber_solve(problem, m, dt, calibration)
    except SeriesDivergedError:
        return math.inf, None
    return l2_error(problem, run, reference), run


@dataclass
class DtScan:
    m: int
    dt_max: float
    n_op: float
    probes: list  # (dt, error)


def max_dt_scan(problem: Problem, m: int, reference: RunResult, eps_dt: float = 1e-6,
                calibration: ImagCalibration | None = None, rel_tol: float = 0.01,
                upper: float = 100.0) -> DtScan:
    """Largest ``dt`` in ``[dt_ref, upper*dt_ref]`` with L2 error below ``eps_dt`` (bisection)."""
    dt_ref = reference.dt
    probes = []

    def ok(dt):
        err, _ = _error_at(problem, m, dt, reference, calibration)
        probes.append((dt, err))
        return err < eps_dt

    hi = dt_ref * upper
    if ok(hi):
        return DtScan(m, hi, m / hi, probes)
    lo = dt_ref
    if not ok(lo):
        return DtScan(m, 0.0, math.inf, probes)
    while hi / lo > 1.0 + rel_tol:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return DtScan(m, lo, m / lo, probes)


def first_passing_dt(problem: Problem, m: int, reference: RunResult, eps_dt: float = 1e-6,
                     start: float = 16.0, smallest: float = 1.0 / 16.0,
                     calibration: ImagCalibration | None = None) -> tuple[float, float, list]:
    """Halve ``dt`` from ``start*dt_ref`` until the error drops below ``eps_dt``.

    Unlike :func:`max_dt_scan` this also probes steps below the reference
    step, which low degrees need.  Returns ``(dt, error, probes)`` with
    ``dt = 0`` when even ``smallest*dt_ref`` fails.
    """
    probes = []
    factor = start
    while factor >= smallest * (1.0 - 1e-12):
        dt = factor * reference.dt
        err, _ = _error_at(problem, m, dt, reference, calibration)
        probes.append((dt, err))
        if err < eps_dt:
            return dt, err, probes
        factor /= 2.0
    return 0.0, probes[-1][1], probes


def error_curve(problem: Problem, m: int, dts, reference: RunResult,
                calibration: ImagCalibration | None = None) -> list:
    """``(dt, L2 error)`` pairs; diverged runs report ``inf``."""
    return [(dt, _error_at(problem, m, dt, reference, calibration)[0]) for dt in dts]


RESULT_COLUMNS = ["tc", "formulation", "order", "m", "dt", "l2_error", "mvo", "wall_s"]


def write_results_csv(path, rows) -> None:
    """``rows`` are dicts keyed by :data:`RESULT_COLUMNS`."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([r["tc"], r["formulation"], r["order"], r["m"], f"{r['dt']:.10e}",
                        f"{r['l2_error']:.6e}", r["mvo"], f"{r['wall_s']:.3f}"])


def save_snapshot(stem, problem: Problem, state: np.ndarray, t: float) -> None:
    """Dump every field of ``state`` in the raw-grid format of :class:`MediumModel`."""
    stem = Path(stem)
    parts = problem.layout.split(state)
    for name, arr in parts.items():
        np.ascontiguousarray(arr, dtype="<f8").tofile(f"{stem}.{name}.bin")
    meta = {"time": t, "dx": problem.model.dx, "extents": list(problem.model.extents),
            "fields": sorted(parts), "shapes": {k: list(v.shape) for k, v in parts.items()},
            "fingerprint": problem.fingerprint}
    Path(f"{stem}.json").write_text(json.dumps(meta, indent=2))


@dataclass
class CornerTable:
    y: np.ndarray
    line_x: float
    degrees: list
    errors: dict          # m -> |u_m - u_ref| along the line (None if diverged)
    line_max: dict        # m -> max error along the line relative to max |u_ref| there
    reference_line: np.ndarray
    snapshots: dict       # t -> reference displacement field
    dt: float

    def failed(self, m, level: float) -> bool:
        return self.errors[m] is None or not self.line_max[m] < level

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "reference"] + [f"err_m{m}" for m in self.degrees])
            for i, y in enumerate(self.y):
                row = [f"{y:.6f}", f"{self.reference_line[i]:.12e}"]
                row += ["nan" if self.errors[m] is None else f"{self.errors[m][i]:.6e}"
                        for m in self.degrees]
                w.writerow(row)


def corner_profile(tc5: TestCase, m_set, dt_factor: float = 11.0, formulation=None, order: int = 4,
                   calibration: ImagCalibration | None = None, problem: Problem | None = None,
                   reference: RunResult | None = None) -> CornerTable:
    """Error along the vertical line ``x = tc5.notes['line_x']`` at the final time."""
    problem = problem or prepare(tc5, formulation, order)
    if reference is None:
        reference = reference_solve(problem, snapshot_times=tc5.snapshot_times)
    dt = dt_factor * reference.dt
    layout, model = problem.layout, problem.model
    name = DISPLACEMENT_FIELDS[problem.formulation][0]
    xs = model.node_coords(0)
    ix = int(np.argmin(np.abs(xs - tc5.notes["line_x"])))
    ys = model.node_coords(1)
    lo, hi = tc5.physical_box()[1]
    rows = (ys >= lo - 1e-9) & (ys <= hi + 1e-9)
    ref_line = layout.split(reference.state)[name][ix, rows]
    scale = float(np.max(np.abs(ref_line))) or 1.0
    errors, line_max = {}, {}
    for m in m_set:
        try:
            run = faber_solve(problem, m, dt, calibration)
        except SeriesDivergedError:
            errors[m], line_max[m] = None, math.inf
            continue
        err = np.abs(layout.split(run.state)[name][ix, rows] - ref_line)
        errors[m] = err
        line_max[m] = float(err.max()) / scale
    snaps = {t: layout.split(s)[name].copy() for t, s in reference.snapshots.items()}
    return CornerTable(ys[rows], float(xs[ix]), list(m_set), errors, line_max, ref_line, snaps, dt)
