"""Command-line entry point: one subcommand per experiment family, data files out.

Every subcommand writes CSV/JSON into ``--out`` together with a
``manifest.json`` echoing the configuration.  Exit codes: 0 success,
1 numerical failure (diverged series), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import scipy

from .faber import SeriesDivergedError
from .medium import PmlConfig
from .operators import Formulation

EXIT_DIVERGED = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    subcommand: str
    tc: int | None = None
    formulation: str | None = None
    order: int = 4
    degrees: list = field(default_factory=list)
    dt_factors: list = field(default_factory=list)
    pml: dict = field(default_factory=lambda: {"delta": 0.8, "beta0": 30.0})
    out: str = "faberwave_out"
    seed: int = 0
    threads: int = 1
    full: bool = False
    options: dict = field(default_factory=dict)

    @property
    def scale(self) -> str:
        return "full" if self.full else "desk"

    def pml_config(self) -> PmlConfig:
        return PmlConfig(**self.pml)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


def parse_degrees(text: str) -> list:
    """``start:end[:step]`` (end inclusive) or a comma list."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, end = parts[:2]
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0 or end < start:
                raise ValueError
            out = list(range(start, end + 1, step))
        else:
            out = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad degree range {text!r}; use start:end:step") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("degrees must be positive")
    return out


def parse_floats(text: str) -> list:
    try:
        vals = [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
    if any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive")
    return vals


def parse_formulation(text: str) -> str:
    try:
        return Formulation.parse(text).value
    except ValueError:
        names = ", ".join(f.value for f in Formulation)
        raise argparse.ArgumentTypeError(f"unknown formulation {text!r}; choose from {names}") from None


def _threads_from_env() -> int:
    raw = os.environ.get("FABERWAVE_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _versions() -> dict:
    try:
        pkg = version("artifact")
    except PackageNotFoundError:
        pkg = "unknown"
    return {"faberwave": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _write_manifest(cfg: RunConfig, outputs: list, grid: dict | None = None) -> Path:
    out = Path(cfg.out)
    manifest = {"config": json.loads(cfg.to_json()), "versions": _versions(), "seed": cfg.seed,
                "grid": grid or {}, "outputs": sorted(str(p) for p in outputs)}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _grid_meta(problem) -> dict:
    model = problem.model
    return {"dx": model.dx, "extents": list(model.extents), "n": problem.op.n,
            "fingerprint": problem.fingerprint}


# --- subcommands -------------------------------------------------------------

def cmd_bounds(cfg: RunConfig) -> list:
    from .bounds import EXPERIMENT_RANGES, ellipse_sweep_experiment, normal_matrix_experiment
    from .ellipse import SpectralRectangle

    out = Path(cfg.out)
    degrees = cfg.degrees or list(range(1, 61))
    if cfg.options.get("sweep") == "ellipse":
        table = ellipse_sweep_experiment(SpectralRectangle(-40.0, 0.0, 2.0), m_range=degrees, seed=cfg.seed)
        path = out / "sweep.csv"
        table.to_csv(path)
        return [path]
    ranges = EXPERIMENT_RANGES[cfg.options.get("experiment", 1)]
    count = cfg.options.get("count", 1)
    paths = []
    for k in range(count):
        report = normal_matrix_experiment(seed=cfg.seed + k, degrees=degrees, **ranges)
        path = out / ("bounds.csv" if count == 1 else f"bounds_{k:03d}.csv")
        report.to_csv(path)
        paths.append(path)
    return paths


def cmd_spectrum(cfg: RunConfig) -> list:
    import csv

    from .operators import build_operator
    from .spectrum import CALIBRATION_PLAN, calibrate_imag_slope, eigen_full, real_bounds
    from .testcases import build_test_case

    out = Path(cfg.out)
    tc_id = cfg.tc or 3
    # 1D eigensolves are cheap at full scale, whose extent every listed dx divides
    tc = build_test_case(tc_id, "full" if tc_id <= 3 else cfg.scale, pml=cfg.pml_config())
    form = Formulation.parse(cfg.formulation or tc.formulation)
    dxs = cfg.options.get("dx") or list(CALIBRATION_PLAN[form.value][2])
    paths = []
    rows = []
    for dx in dxs:
        op = build_operator(form, tc.model(dx), tc.pml, cfg.order)
        eig = eigen_full(op)
        re_min, re_max = real_bounds(tc.pml, dx, form)
        rows.append([f"{dx:.6g}", op.n, f"{np.max(np.abs(eig.imag)):.10e}", f"{eig.real.min():.10e}",
                     f"{eig.real.max():.10e}", f"{-re_min:.10e}"])
        if cfg.options.get("full_eigen"):
            path = out / f"eigenvalues_dx{dx:.6g}.csv"
            order = np.lexsort((eig.imag, eig.real))
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["re", "im"])
                for z in eig[order]:
                    w.writerow([f"{z.real:.12e}", f"{z.imag:.12e}"])
            paths.append(path)
    path = out / "spectrum.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dx", "n", "im_max", "re_min", "re_max", "beta_max"])
        w.writerows(rows)
    paths.append(path)
    if cfg.options.get("calibrate"):
        cal = calibrate_imag_slope(form, tc.model, tc.pml, cfg.order, dxs)
        path = out / "calibration.json"
        cal.save(path)
        paths.append(path)
    return paths


def cmd_stability(cfg: RunConfig) -> list:
    from .analysis import stability_report

    form = Formulation.parse(cfg.formulation or "acoustic1d-1sd")
    report = stability_report(form, cfg.order, cfg.degrees or range(3, 41))
    path = Path(cfg.out) / f"stability_{form.value}_o{cfg.order}.csv"
    report.to_csv(path)
    return [path]


def cmd_dispersion(cfg: RunConfig) -> list:
    from .analysis import dispersion_report

    form = Formulation.parse(cfg.formulation or "acoustic1d-1sd")
    report = dispersion_report(form, cfg.order, cfg.degrees or range(3, 41))
    path = Path(cfg.out) / f"dispersion_{form.value}_o{cfg.order}.csv"
    report.to_csv(path)
    return [path]


def cmd_converge(cfg: RunConfig) -> tuple[list, dict]:
    import csv

    from .harness import faber_solve, l2_error, max_dt_scan, prepare, reference_solve, write_results_csv
    from .testcases import build_test_case

    out = Path(cfg.out)
    tc = build_test_case(cfg.tc or 2, cfg.scale, pml=cfg.pml_config())
    problem = prepare(tc, cfg.formulation, cfg.order)
    reference = reference_solve(problem)
    degrees = cfg.degrees or [5, 10, 15, 20, 25]
    factors = cfg.dt_factors or [1.0, 2.0, 4.0, 8.0, 16.0]
    timing = cfg.options.get("timing", False)
    rows = []
    for m in degrees:
        for f in factors:
            dt = f * reference.dt
            try:
                run = faber_solve(problem, m, dt)
                err, mvo, wall = l2_error(problem, run, reference), run.mvo, run.wall
            except SeriesDivergedError:
                err, mvo, wall = float("inf"), 0, 0.0
            rows.append({"tc": tc.id, "formulation": problem.formulation.value, "order": cfg.order,
                         "m": m, "dt": dt, "l2_error": err, "mvo": mvo, "wall_s": wall})
    path = out / "converge.csv"
    _write_rows(path, rows, timing, write_results_csv)
    paths = [path]
    if cfg.options.get("dt_max"):
        path = out / "dtmax.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "dt_max", "n_op_dt"])
            for m in degrees:
                scan = max_dt_scan(problem, m, reference)
                w.writerow([m, f"{scan.dt_max:.10e}", f"{scan.n_op:.6e}"])
        paths.append(path)
    return paths, _grid_meta(problem)


def _write_rows(path, rows, timing, writer):
    # wall-clock is only recorded on request so that reruns stay byte-identical
    if timing:
        writer(path, rows)
        return
    import csv

    from .harness import RESULT_COLUMNS

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([r["tc"], r["formulation"], r["order"], r["m"], f"{r['dt']:.10e}",
                        f"{r['l2_error']:.6e}", r["mvo"], ""])


def cmd_corner(cfg: RunConfig) -> tuple[list, dict]:
    from .harness import corner_profile, prepare, reference_solve, save_snapshot
    from .testcases import build_test_case

    out = Path(cfg.out)
    tc = build_test_case(5, cfg.scale, pml=cfg.pml_config())
    problem = prepare(tc, cfg.formulation, cfg.order)
    reference = reference_solve(problem, snapshot_times=tc.snapshot_times)
    table = corner_profile(tc, cfg.degrees or list(range(10, 19)), cfg.options.get("dt_factor", 11.0),
                           problem=problem, reference=reference)
    paths = [out / "corner.csv"]
    table.to_csv(paths[0])
    for t, state in sorted(reference.snapshots.items()):
        stem = out / f"snapshot_t{t:.4f}"
        save_snapshot(stem, problem, state, t)
        paths.append(Path(f"{stem}.json"))
    grid = _grid_meta(problem)
    grid["line_x"] = table.line_x
    grid["dt"] = table.dt
    return paths, grid


COMMANDS = {"bounds": cmd_bounds, "spectrum": cmd_spectrum, "stability": cmd_stability,
            "dispersion": cmd_dispersion, "converge": cmd_converge, "corner": cmd_corner}


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="faberwave_out", help="output directory (created)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--full", action="store_true", help="full-size domains instead of the reduced desk scale")
    common.add_argument("--order", type=int, choices=(4, 8), default=4)
    common.add_argument("--formulation", type=parse_formulation)
    common.add_argument("--delta", type=float, default=0.8, help="PML thickness")
    common.add_argument("--beta0", type=float, default=30.0, help="PML damping amplitude")

    parser = argparse.ArgumentParser(prog="faberwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("bounds", parents=[common], help="error bounds on random normal matrices")
    p.add_argument("--experiment", type=int, choices=(1, 2), default=1)
    p.add_argument("--count", type=int, default=1, help="number of random matrices")
    p.add_argument("--sweep", choices=("ellipse",))
    p.add_argument("--degrees", type=parse_degrees)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalue extents and calibration")
    p.add_argument("--tc", type=int, choices=range(1, 8), default=3)
    p.add_argument("--dx", type=parse_floats)
    p.add_argument("--full-eigen", action="store_true", help="write every eigenvalue")
    p.add_argument("--calibrate", action="store_true", help="fit the imaginary-extent line")

    for name, helptext in (("stability", "CFL number per degree"), ("dispersion", "alpha_R per degree")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--degrees", type=parse_degrees)

    p = sub.add_parser("converge", parents=[common], help="error versus time step")
    p.add_argument("--tc", type=int, choices=range(1, 8), default=2)
    p.add_argument("--degrees", type=parse_degrees)
    p.add_argument("--dt-factors", type=parse_floats, help="time steps as multiples of the reference step")
    p.add_argument("--dt-max", action="store_true", help="also bisect the largest accurate step")
    p.add_argument("--timing", action="store_true", help="record wall-clock seconds")

    p = sub.add_parser("corner", parents=[common], help="corner model line errors and snapshots")
    p.add_argument("--degrees", type=parse_degrees)
    p.add_argument("--dt-factor", type=float, default=11.0)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    options = {}
    for key in ("experiment", "count", "sweep", "dx", "full_eigen", "calibrate", "dt_max", "timing",
                "dt_factor"):
        val = getattr(args, key, None)
        if val not in (None, False):
            options[key] = val
    return RunConfig(subcommand=args.subcommand, tc=getattr(args, "tc", None), formulation=args.formulation,
                     order=args.order, degrees=getattr(args, "degrees", None) or [],
                     dt_factors=getattr(args, "dt_factors", None) or [],
                     pml={"delta": args.delta, "beta0": args.beta0}, out=args.out, seed=args.seed,
                     threads=_threads_from_env(), full=args.full, options=options)


def run(cfg: RunConfig) -> list:
    from threadpoolctl import threadpool_limits

    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    with threadpool_limits(limits=cfg.threads):
        result = COMMANDS[cfg.subcommand](cfg)
    paths, grid = result if isinstance(result, tuple) else (result, None)
    paths = list(paths) + [_write_manifest(cfg, paths, grid)]
    return paths


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with code 2 on usage errors
    try:
        cfg = config_from_args(args)
        paths = run(cfg)
    except SeriesDivergedError as exc:
        print(f"faberwave: numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, KeyError) as exc:
        print(f"faberwave: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
