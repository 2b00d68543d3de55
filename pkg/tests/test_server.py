import numpy as np
import pytest
from fastapi.testclient import TestClient

import taperod
from taperod import calibration
from taperod.server import app

SPEC = {
    "length": 0.345,
    "base_radius": 0.0111,
    "tip_radius": 0.0045,
    "youngs_modulus": 67e6,
    "poisson_ratio": 0.39,
}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["version"] == taperod.__version__


def test_solve_straight(client):
    r = client.post("/solve", json={"spec": SPEC, "tensions": [0, 0, 0],
                                    "steps": 100})
    assert r.status_code == 200
    body = r.json()
    assert body["converged"] is True
    assert np.allclose(body["tip_position"], [0, 0, 0.345], atol=1e-9)
    assert len(body["s"]) == 101
    assert len(body["p"]) == 101 and len(body["p"][0]) == 3
    assert body["bending_angle_rad"] < 1e-12


def test_solve_matches_library(client):
    r = client.post("/solve", json={"spec": SPEC, "tensions": [5]})
    assert r.status_code == 200
    ref = taperod.shoot(taperod.reference_spec(), [5.0, 0.0, 0.0])
    assert np.allclose(r.json()["tip_position"], ref.tip_position, atol=1e-9)


def test_solve_too_many_tensions(client):
    r = client.post("/solve", json={"spec": SPEC, "tensions": [1, 2, 3, 4]})
    assert r.status_code == 400
    assert r.json()["detail"].startswith("input error")


def test_solve_rejects_malformed_body(client):
    assert client.post("/solve", json={"tensions": [1]}).status_code == 422
    r = client.post("/solve", json={"spec": SPEC, "tensions": [1],
                                    "bogus_field": 1})
    assert r.status_code == 422


def test_solve_rejects_invalid_spec_values(client):
    bad = dict(SPEC, tip_radius=0.02)   # wider than the base
    r = client.post("/solve", json={"spec": bad, "tensions": [0]})
    assert r.status_code == 400


def test_solve_convergence_failure_is_409(client):
    r = client.post("/solve", json={"spec": SPEC, "tensions": [1e5],
                                    "steps": 100})
    assert r.status_code == 409
    assert "convergence" in r.json()["detail"]


def test_sweep(client):
    r = client.post("/sweep", json={"spec": SPEC, "alphas_deg": [0.0, 0.4],
                                    "tensions": [0.0, 3.0], "steps": 100})
    assert r.status_code == 200
    cells = r.json()["cells"]
    assert len(cells) == 4
    assert all(c["converged"] for c in cells)
    by_key = {(c["alpha_deg"], c["tension_n"]): c for c in cells}
    assert (by_key[(0.0, 3.0)]["bending_angle_rad"]
            > by_key[(0.0, 0.0)]["bending_angle_rad"])
    assert (by_key[(0.4, 3.0)]["bending_angle_rad"]
            > by_key[(0.0, 3.0)]["bending_angle_rad"])


def test_design_recovers_planted_angle(client):
    r = client.post("/design", json={"spec": SPEC, "tension": 7.0,
                                     "plant_alpha": 0.8,
                                     "bounds": [0.0, 1.5], "steps": 100})
    assert r.status_code == 200
    body = r.json()
    assert abs(body["alpha_opt_deg"] - 0.8) <= 1e-2
    assert len(body["curve_alphas"]) == len(body["curve_costs"])
    assert all(c is not None for c in body["curve_costs"])


def test_design_reports_infeasible_angles_as_null(client):
    # the default 0..2 deg scan passes the geometric feasibility limit
    r = client.post("/design", json={"spec": SPEC, "tension": 7.0,
                                     "plant_alpha": 0.8, "steps": 100})
    assert r.status_code == 200
    body = r.json()
    assert abs(body["alpha_opt_deg"] - 0.8) <= 1e-2
    assert body["curve_costs"][-1] is None
    assert body["curve_costs"][0] is not None


def test_design_requires_exactly_one_target(client):
    r = client.post("/design", json={"spec": SPEC, "tension": 7.0})
    assert r.status_code == 400
    r = client.post("/design", json={
        "spec": SPEC, "tension": 7.0, "plant_alpha": 0.8,
        "target": {"s": [0.0, 0.345], "u": [[0, 0, 0], [0, 0, 0]]}})
    assert r.status_code == 400


def test_design_validates_bounds(client):
    r = client.post("/design", json={"spec": SPEC, "tension": 7.0,
                                     "plant_alpha": 0.8,
                                     "bounds": [1.5, 0.5]})
    assert r.status_code == 400
    r = client.post("/design", json={"spec": SPEC, "tension": 7.0,
                                     "plant_alpha": 0.8, "bounds": [1.0]})
    assert r.status_code == 400


def test_design_accepts_target_profile(client):
    problem = taperod.design.DesignProblem(
        base_spec=taperod.reference_spec(), tension=7.0,
        config=taperod.SolverConfig(grid_steps=100))
    target = taperod.design.planted_profile(problem, 1.1)
    r = client.post("/design", json={
        "spec": SPEC, "tension": 7.0, "steps": 100, "bounds": [0.0, 1.5],
        "target": {"s": target.s.tolist(), "u": target.u.tolist()}})
    assert r.status_code == 200
    assert abs(r.json()["alpha_opt_deg"] - 1.1) <= 1e-2


def test_calibrate(client):
    spec = taperod.reference_spec()
    cfg = taperod.SolverConfig(grid_steps=100)
    ds, _ = calibration.synthesize_dataset(spec, 120e6, n_samples=20,
                                           tension_max=8.0, seed=5,
                                           config=cfg)
    r = client.post("/calibrate", json={
        "spec": SPEC,
        "dataset": {"tensions": ds.tensions.tolist(),
                    "markers": ds.markers.tolist(),
                    "disc_s": ds.disc_s.tolist()},
        "e_min_mpa": 110.0, "e_max_mpa": 130.0, "e_step_mpa": 10.0,
        "steps": 100})
    assert r.status_code == 200
    body = r.json()
    assert body["youngs_mpa"] == 120.0
    assert body["e_mpa"] == [110.0, 120.0, 130.0]
    assert body["dropped"] == 0
    rot = np.array(body["transform"]["rotation"])
    assert rot.shape == (3, 3)
    assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-9)
    assert len(body["bias"]["delta"]) == len(body["bias"]["disc_s"])
    assert all(len(row) == 4 for row in body["test_errors"])


def test_calibrate_rejects_mismatched_dataset(client):
    r = client.post("/calibrate", json={
        "spec": SPEC,
        "dataset": {"tensions": [[1.0, 0, 0]],
                    "markers": [[[0, 0, 0.1]]],   # one disc, spec has ten
                    "disc_s": [0.1, 0.2]},
        "e_min_mpa": 110.0, "e_max_mpa": 130.0, "e_step_mpa": 10.0})
    assert r.status_code == 400


def test_geometry_manifest(client):
    r = client.post("/geometry", json={"spec": SPEC})
    assert r.status_code == 200
    manifest = r.json()["manifest"]
    assert manifest["backbone"]["length_m"] == "0.345"
    assert len(manifest["discs"]) == 10
    assert len(manifest["tendons"]) == 3
    assert float(manifest["backbone"]["taper_angle_deg"]) == pytest.approx(
        taperod.taper_angle(taperod.reference_spec()))
