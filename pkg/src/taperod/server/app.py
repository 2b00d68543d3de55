"""HTTP service exposing the solver, design, and calibration pipelines.

Run with: uvicorn taperod.server.app:app

Error mapping: malformed bodies are FastAPI 422s; domain input errors are
400; convergence and optimization failures are 409 with a detail message.
"""

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, calibration, design, geometry, solver
from ..errors import (DegenerateGeometry, EmptyDataset, IoFailure,
                      NoConvergence, NonUnimodal, NotConverged,
                      OffsetInsideBackbone, OutOfDomain, SingularStiffness,
                      SingularSystem, ZeroTangent)
from ..model import ExternalLoads
from ..solver import SolverConfig
from . import schemas

_INPUT_ERRORS = (IoFailure, OutOfDomain, OffsetInsideBackbone, EmptyDataset,
                 DegenerateGeometry, ValueError)
_CONVERGENCE_ERRORS = (NoConvergence, NotConverged, ZeroTangent,
                       SingularSystem, SingularStiffness)


def _guard(fn):
    try:
        return fn()
    except NonUnimodal as exc:
        raise HTTPException(status_code=409,
                            detail=f"optimization failure: {exc}")
    except _CONVERGENCE_ERRORS as exc:
        raise HTTPException(status_code=409,
                            detail=f"convergence failure: {exc}")
    except _INPUT_ERRORS as exc:
        raise HTTPException(status_code=400, detail=f"input error: {exc}")


def _tension_vector(spec, values):
    if len(values) > spec.tendon_count:
        raise ValueError(f"{len(values)} tensions given but the robot has "
                         f"{spec.tendon_count} tendons")
    tau = np.zeros(spec.tendon_count)
    tau[:len(values)] = values
    return tau


def create_app():
    app = FastAPI(title="taperod",
                  description="Tapered tendon-driven continuum robot statics",
                  version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/solve", response_model=schemas.SolutionModel)
    def solve(req: schemas.SolveRequest):
        def run():
            spec = req.spec.to_spec()
            tau = _tension_vector(spec, req.tensions)
            loads = None
            if req.tip_force or req.tip_moment:
                loads = ExternalLoads.tip(
                    force=req.tip_force or (0.0, 0.0, 0.0),
                    moment=req.tip_moment or (0.0, 0.0, 0.0))
            sol = solver.shoot(spec, tau, loads=loads,
                               config=SolverConfig(grid_steps=req.steps))
            return schemas.SolutionModel.from_solution(sol)
        return _guard(run)

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest):
        def run():
            spec = req.spec.to_spec()
            cells = design.taper_tension_sweep(
                spec, req.alphas_deg, req.tensions,
                config=SolverConfig(grid_steps=req.steps))
            out = []
            for alpha, tension, sol in cells:
                if sol is None:
                    out.append(schemas.SweepCellModel(
                        alpha_deg=alpha, tension_n=tension, converged=False))
                else:
                    out.append(schemas.SweepCellModel(
                        alpha_deg=alpha, tension_n=tension,
                        converged=bool(sol.converged),
                        tip_position=sol.tip_position.tolist(),
                        bending_angle_rad=sol.bending_angle()))
            return schemas.SweepResponse(cells=out)
        return _guard(run)

    @app.post("/design", response_model=schemas.DesignResponse)
    def design_endpoint(req: schemas.DesignRequest):
        def run():
            if len(req.bounds) != 2:
                raise ValueError("bounds must be [lo, hi]")
            problem = design.DesignProblem(
                base_spec=req.spec.to_spec(), tension=req.tension,
                alpha_bounds=(req.bounds[0], req.bounds[1]),
                noise=req.noise, seed=req.seed,
                config=SolverConfig(grid_steps=req.steps))
            if (req.target is None) == (req.plant_alpha is None):
                raise ValueError("give exactly one of target or plant_alpha")
            if req.plant_alpha is not None:
                u_d = design.planted_profile(problem, req.plant_alpha)
            else:
                u_d = req.target.to_profile()
            result = design.optimize_taper(problem, u_d)
            costs = [float(c) if np.isfinite(c) else None
                     for c in result.curve_costs]
            return schemas.DesignResponse(
                alpha_opt_deg=result.alpha_opt_deg, cost=result.cost,
                curve_alphas=result.curve_alphas.tolist(),
                curve_costs=costs)
        return _guard(run)

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(req: schemas.CalibrateRequest):
        def run():
            spec = req.spec.to_spec()
            disc_s = (req.dataset.disc_s if req.dataset.disc_s is not None
                      else geometry.disc_layout(spec).positions)
            dataset = calibration.CalibrationDataset(
                tensions=np.asarray(req.dataset.tensions, dtype=float),
                markers=np.asarray(req.dataset.markers, dtype=float),
                disc_s=np.asarray(disc_s, dtype=float),
                times=(np.asarray(req.dataset.times, dtype=float)
                       if req.dataset.times is not None else None))
            report = calibration.run_calibration(
                spec, dataset, e_min=req.e_min_mpa * 1e6,
                e_max=req.e_max_mpa * 1e6, e_step=req.e_step_mpa * 1e6,
                split_fraction=req.split, bin_width=req.bin_width,
                seed=req.seed, config=SolverConfig(grid_steps=req.steps))
            return schemas.CalibrateResponse(
                youngs_mpa=report.youngs_opt / 1e6,
                e_mpa=(report.e_grid / 1e6).tolist(),
                costs=report.costs.tolist(),
                dropped=report.dropped, total=report.total,
                transform=schemas.TransformModel(
                    rotation=report.transform.rotation.tolist(),
                    translation=report.transform.translation.tolist()),
                bias=schemas.BiasModel(
                    disc_s=report.bias.disc_s.tolist(),
                    delta=report.bias.delta.tolist()),
                test_errors=report.test_errors.rows.tolist())
        return _guard(run)

    @app.post("/geometry", response_model=schemas.GeometryResponse)
    def geometry_endpoint(req: schemas.GeometryRequest):
        def run():
            return schemas.GeometryResponse(
                manifest=geometry.manifest_document(req.spec.to_spec()))
        return _guard(run)

    return app


app = create_app()
