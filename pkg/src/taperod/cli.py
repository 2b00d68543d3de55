"""Command line front end.

Commands: solve, sweep, design, calibrate, geometry. Every run is
deterministic given its inputs and --seed; outputs are CSV (or YAML for the
geometry manifest) written into --out.

Exit codes: 0 ok, 1 input error, 2 convergence failure, 3 optimization
failure. Failures print a single `error: <message>` line on stderr.
"""

import argparse
import os
import sys

import numpy as np

from . import calibration, design, geometry, solver
from .errors import (DegenerateGeometry, EmptyDataset, IoFailure,
                     NoConvergence, NonUnimodal, NotConverged,
                     OffsetInsideBackbone, OutOfDomain, SingularStiffness,
                     SingularSystem, ZeroTangent)
from .model import ExternalLoads
from .solver import SolverConfig

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONVERGENCE = 2
EXIT_OPTIMIZATION = 3

_INPUT_ERRORS = (IoFailure, OutOfDomain, OffsetInsideBackbone, EmptyDataset,
                 DegenerateGeometry, ValueError)
_CONVERGENCE_ERRORS = (NoConvergence, NotConverged, ZeroTangent,
                       SingularSystem, SingularStiffness)


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; remap to our input-error code
    def error(self, message):
        raise _ArgumentError(message)


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _float_list(text):
    """Accepts `1,2,3`, an inclusive `lo..hi` unit-step range, or
    `lo:hi:step`."""
    text = text.strip()
    if ".." in text:
        lo, hi = (float(x) for x in text.split(".."))
        return list(np.arange(lo, hi + 1e-9, 1.0))
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"bad range {text!r}, expected lo:hi[:step]")
        lo, hi = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else 1.0
        if step <= 0 or hi < lo:
            raise ValueError(f"bad range {text!r}")
        return list(np.arange(lo, hi + 0.5 * step, step))
    return _floats(text)


def _pair(text, name):
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{name} must look like lo:hi")
    return float(parts[0]), float(parts[1])


def _load_spec(args):
    if not os.path.exists(args.spec):
        raise IoFailure(f"spec not found: {args.spec}")
    return geometry.load_spec(args.spec)


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _config(args):
    return SolverConfig(grid_steps=args.steps)


def _tension_vector(spec, values):
    if len(values) > spec.tendon_count:
        raise ValueError(f"{len(values)} tensions given but the robot has "
                         f"{spec.tendon_count} tendons")
    tau = np.zeros(spec.tendon_count)
    tau[:len(values)] = values
    return tau


def _tip_loads(args):
    force = _floats(args.tip_force) if args.tip_force else [0.0, 0.0, 0.0]
    moment = _floats(args.tip_moment) if args.tip_moment else [0.0, 0.0, 0.0]
    if len(force) != 3 or len(moment) != 3:
        raise ValueError("tip loads need exactly 3 components")
    if not any(force) and not any(moment):
        return None
    return ExternalLoads.tip(force=force, moment=moment)


def cmd_solve(args):
    spec = _load_spec(args)
    tau = _tension_vector(spec, _floats(args.tensions))
    sol = solver.shoot(spec, tau, loads=_tip_loads(args),
                       config=_config(args))
    path = _out_path(args, "solution.csv")
    solver.write_solution_csv(sol, path)
    for key, value in solver.solution_summary(sol).items():
        print(f"{key}={value}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args):
    spec = _load_spec(args)
    alphas = _float_list(args.alphas)
    tensions = _float_list(args.tensions)
    cells = design.taper_tension_sweep(spec, alphas, tensions,
                                       config=_config(args))
    good = [c for c in cells if c[2] is not None and c[2].converged]
    path = _out_path(args, "sweep.csv")
    design.write_sweep_csv(good, path)
    print(f"cells={len(cells)} converged={len(good)}")
    print(f"wrote {path}")
    if len(good) != len(cells):
        raise NoConvergence(f"{len(cells) - len(good)} sweep cells failed "
                            "to converge")
    return EXIT_OK


def cmd_design(args):
    spec = _load_spec(args)
    bounds = _pair(args.bounds, "--bounds")
    config = _config(args)
    if args.grid_alphas or args.grid_tensions:
        if not (args.grid_alphas and args.grid_tensions):
            raise ValueError("grid mode needs both --grid-alphas and "
                             "--grid-tensions")
        alphas = _float_list(args.grid_alphas)
        tensions = _float_list(args.grid_tensions)
        errors, _ = design.planted_recovery_grid(
            spec, tensions, alphas, noise=args.noise, seed=args.seed,
            bounds=bounds, config=config)
        path = _out_path(args, "design_grid.csv")
        design.write_recovery_grid_csv(tensions, alphas, errors, path)
        print(f"max_abs_err_deg={repr(float(np.max(np.abs(errors))))}")
        print(f"wrote {path}")
        return EXIT_OK
    if args.tension is None:
        raise ValueError("--tension is required outside grid mode")
    problem = design.DesignProblem(base_spec=spec, tension=args.tension,
                                   alpha_bounds=bounds, noise=args.noise,
                                   seed=args.seed, config=config)
    if (args.target is None) == (args.plant_alpha is None):
        raise ValueError("give exactly one of --target or --plant-alpha")
    if args.plant_alpha is not None:
        u_d = design.planted_profile(problem, args.plant_alpha)
        tpath = _out_path(args, "target_profile.csv")
        design.write_profile_csv(u_d, tpath)
        print(f"wrote {tpath}")
    else:
        u_d = design.read_profile_csv(args.target)
    result = design.optimize_taper(problem, u_d)
    path = _out_path(args, "design_cost.csv")
    design.write_cost_curve_csv(result, path)
    print(f"alpha_opt_deg={repr(result.alpha_opt_deg)}")
    print(f"cost={repr(result.cost)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_calibrate(args):
    spec = _load_spec(args)
    lo_hi_step = args.range.split(":")
    if len(lo_hi_step) != 3:
        raise ValueError("--range must look like lo:hi:step (MPa)")
    e_min, e_max, e_step = (float(x) * 1e6 for x in lo_hi_step)
    table = None
    if args.loadcell:
        table = calibration.read_loadcell_table(args.loadcell)
    disc_s = geometry.disc_layout(spec).positions
    dataset = calibration.read_dataset_csv(args.dataset, disc_s, table=table)
    report = calibration.run_calibration(
        spec, dataset, e_min=e_min, e_max=e_max, e_step=e_step,
        split_fraction=args.split, bin_width=args.bin, seed=args.seed,
        config=_config(args))
    fit_path = _out_path(args, "fit_cost.csv")
    err_path = _out_path(args, "test_errors.csv")
    calibration.write_fit_csv(report, fit_path)
    calibration.write_test_errors_csv(report.test_errors, err_path)
    print(f"youngs_mpa={repr(report.youngs_opt / 1e6)}")
    print(f"train_samples={report.total} dropped={report.dropped}")
    print(f"wrote {fit_path}")
    print(f"wrote {err_path}")
    return EXIT_OK


def cmd_geometry(args):
    spec = _load_spec(args)
    path = _out_path(args, "manifest.yaml")
    geometry.export_manifest(spec, path)
    print(f"taper_angle_deg={repr(geometry.taper_angle(spec))}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="taperod",
                     description="Tapered tendon-driven continuum robot "
                                 "statics: solve, sweep, design, calibrate.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True,
                       help="robot spec YAML (explicit units: field)")
        p.add_argument("--out", default=".",
                       help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--steps", type=int, default=200,
                       help="integration grid steps")

    p = sub.add_parser("solve", help="single forward solve")
    common(p)
    p.add_argument("--tensions", default="0",
                   help="comma list of tendon tensions [N], zero-padded")
    p.add_argument("--tip-force", default=None,
                   help="world-frame tip force fx,fy,fz [N]")
    p.add_argument("--tip-moment", default=None,
                   help="world-frame tip moment mx,my,mz [N m]")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="taper x tension sweep grid")
    common(p)
    p.add_argument("--alphas", default="0,0.4,0.8,1.2",
                   help="taper angles [deg]: comma list, lo..hi, or lo:hi:step")
    p.add_argument("--tensions", default="0..12",
                   help="tendon-1 tensions [N]: comma list, lo..hi, or lo:hi:step")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("design", help="inverse taper-angle design")
    common(p)
    p.add_argument("--tension", type=float, default=None,
                   help="actuated tendon tension [N]")
    p.add_argument("--target", default=None,
                   help="target curvature profile CSV (s_m,ux,uy,uz)")
    p.add_argument("--plant-alpha", type=float, default=None,
                   help="generate the target internally at this angle [deg]")
    p.add_argument("--noise", type=float, default=0.0,
                   help="multiplicative target noise half-width")
    p.add_argument("--bounds", default="0:2", help="search bounds [deg]")
    p.add_argument("--grid-alphas", default=None,
                   help="grid mode: planted angles [deg]")
    p.add_argument("--grid-tensions", default=None,
                   help="grid mode: tensions [N]")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("calibrate", help="Young's modulus calibration")
    common(p)
    p.add_argument("--dataset", required=True,
                   help="capture dataset CSV (long or wide form)")
    p.add_argument("--loadcell", default=None,
                   help="load-cell table file (needed for adcK_bit datasets)")
    p.add_argument("--range", default="50:200:1",
                   help="modulus search lo:hi:step [MPa]")
    p.add_argument("--split", type=float, default=0.7,
                   help="train fraction")
    p.add_argument("--bin", type=float, default=1.0,
                   help="tension bin width for resampling [N]")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("geometry", help="export the geometry manifest")
    common(p)
    p.set_defaults(func=cmd_geometry)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NonUnimodal as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZATION
    except _CONVERGENCE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
