import math

import numpy as np
import pytest

import taperod
from taperod import design
from taperod.errors import IoFailure, NonUnimodal, NotConverged
from taperod.geometry import taper_angle
from taperod.solver import RodSolution


def _problem(ref_spec, tension=7.0, **kw):
    return design.DesignProblem(base_spec=ref_spec, tension=tension, **kw)


def test_problem_validation(ref_spec):
    with pytest.raises(ValueError):
        _problem(ref_spec, alpha_bounds=(1.0, 0.5))
    with pytest.raises(ValueError):
        _problem(ref_spec, tension=-1.0)
    with pytest.raises(ValueError):
        _problem(ref_spec, actuated_tendon=3)
    tau = _problem(ref_spec, tension=5.0, actuated_tendon=1).tension_vector()
    assert np.allclose(tau, [0.0, 5.0, 0.0])


def test_curvature_of_requires_convergence(ref_spec):
    sol = taperod.shoot(ref_spec, [3.0, 0.0, 0.0])
    prof = design.curvature_of(sol)
    assert np.array_equal(prof.s, sol.s)
    assert np.array_equal(prof.u, sol.u)
    fake = RodSolution(s=sol.s, p=sol.p, q=sol.q, v=sol.v, u=sol.u,
                       converged=False, residual_norm=1.0, iterations=1)
    with pytest.raises(NotConverged):
        design.curvature_of(fake)


def test_single_tendon_bends_toward_it(ref_spec):
    # first tendon sits on +x: the tip should move to +x, curvature about +y
    sol = taperod.shoot(ref_spec, [5.0, 0.0, 0.0])
    assert sol.tip_position[0] > 0.02
    mid = sol.u[sol.s.size // 2]
    assert mid[1] > 0.5
    assert abs(mid[0]) < 1e-6 and abs(mid[2]) < 1e-6


def test_design_cost_zero_at_planted_angle(ref_spec):
    problem = _problem(ref_spec)
    target = design.planted_profile(problem, 0.8)
    assert design.design_cost(problem, 0.8, target) < 1e-18
    assert design.design_cost(problem, 1.0, target) > 1e-6


def test_design_cost_rejects_out_of_bounds(ref_spec):
    problem = _problem(ref_spec, alpha_bounds=(0.0, 1.5))
    target = design.planted_profile(problem, 0.8)
    with pytest.raises(ValueError):
        design.design_cost(problem, 1.6, target)


def test_planted_profile_noise_bounds_and_seeding(ref_spec):
    clean = design.planted_profile(_problem(ref_spec), 0.8)
    noisy_a = design.planted_profile(_problem(ref_spec, noise=0.4, seed=3), 0.8)
    noisy_b = design.planted_profile(_problem(ref_spec, noise=0.4, seed=3), 0.8)
    noisy_c = design.planted_profile(_problem(ref_spec, noise=0.4, seed=4), 0.8)
    assert np.array_equal(noisy_a.u, noisy_b.u)
    assert not np.array_equal(noisy_a.u, noisy_c.u)
    nz = np.abs(clean.u) > 1e-9
    ratio = noisy_a.u[nz] / clean.u[nz]
    assert np.all(ratio >= 0.6 - 1e-12) and np.all(ratio <= 1.4 + 1e-12)


def test_recovers_planted_taper_without_noise(ref_spec):
    problem = _problem(ref_spec, tension=7.0)
    target = design.planted_profile(problem, 0.8)
    result = design.optimize_taper(problem, target)
    assert abs(result.alpha_opt_deg - 0.8) <= 1e-2
    assert result.cost <= np.nanmin(
        np.where(np.isfinite(result.curve_costs), result.curve_costs, np.nan))
    assert result.curve_alphas.size == design.SCAN_POINTS


def test_recovers_planted_taper_with_noise(ref_spec):
    errors, results = design.planted_recovery_grid(
        ref_spec, tensions=[7.0], alphas_deg=[1.08], noise=0.5, seed=42)
    assert errors.shape == (1, 1)
    assert abs(errors[0, 0]) <= 0.05
    assert results[0][0].cost > 0.0   # noisy target is not exactly attainable


def test_multimodal_cost_scan_is_rejected(ref_spec, monkeypatch):
    def w_shaped(solution, u_d):
        alpha = taper_angle(solution.spec)
        return (alpha - 0.5) ** 2 * (alpha - 1.5) ** 2

    monkeypatch.setattr(design, "_profile_cost", w_shaped)
    problem = _problem(ref_spec, tension=5.0)
    target = design.CurvatureProfile(s=np.array([0.0, ref_spec.length]),
                                     u=np.zeros((2, 3)))
    with pytest.raises(NonUnimodal) as err:
        design.optimize_taper(problem, target)
    assert err.value.alphas.size == design.SCAN_POINTS
    finite = np.isfinite(err.value.costs)
    assert np.any(finite)


def test_separated_minima_merges_shallow_wiggles():
    assert design._separated_minima(np.array([5, 3, 1, 2, 4.0])) == [2]
    two = design._separated_minima(np.array([5, 1, 4, 0.5, 5.0]))
    assert len(two) == 2
    shallow = design._separated_minima(np.array([5, 1.0, 1.02, 1.0, 5.0]))
    assert len(shallow) == 1
    with_inf = design._separated_minima(
        np.array([np.inf, 2.0, 1.0, 3.0, np.inf]))
    assert with_inf == [2]
    assert design._separated_minima(np.array([np.inf, np.inf])) == []


def test_golden_section_finds_parabola_minimum():
    x, fx = design._golden_section(lambda x: (x - 1.3) ** 2, 0.0, 2.0, 1e-4)
    assert abs(x - 1.3) < 1e-4
    assert fx < 1e-8


def test_taper_tension_sweep_layout(ref_spec):
    alphas = [0.0, 0.8]
    tensions = [0.0, 2.0, 4.0]
    cells = design.taper_tension_sweep(ref_spec, alphas, tensions)
    assert len(cells) == 6
    assert all(sol.converged for _, _, sol in cells)
    assert [a for a, _, _ in cells] == [0.0, 0.0, 0.0, 0.8, 0.8, 0.8]
    bend = {(a, t): sol.bending_angle() for a, t, sol in cells}
    assert bend[(0.0, 0.0)] < bend[(0.0, 2.0)] < bend[(0.0, 4.0)]
    assert bend[(0.8, 4.0)] > bend[(0.0, 4.0)]


def test_sweep_csv_roundtrip(tmp_path, ref_spec):
    cfg = taperod.SolverConfig(grid_steps=20)
    cells = design.taper_tension_sweep(ref_spec, [0.0, 0.4], [0.0, 3.0],
                                       config=cfg)
    path = tmp_path / "sweep.csv"
    design.write_sweep_csv(cells, path)
    data = design.read_sweep_csv(path)
    assert data.shape == (4 * 21, 9)
    last = cells[-1][2]
    assert np.allclose(data[-1, 3:6], last.tip_position, atol=1e-12)
    assert data[-1, 0] == 0.4 and data[-1, 1] == 3.0


def test_cost_curve_csv_roundtrip(tmp_path):
    result = design.DesignResult(
        alpha_opt_deg=0.8, cost=0.5,
        curve_alphas=np.linspace(0, 2, 5),
        curve_costs=np.array([4.0, 1.0, 0.5, 2.0, np.inf]))
    path = tmp_path / "curve.csv"
    design.write_cost_curve_csv(result, path)
    alphas, costs = design.read_cost_curve_csv(path)
    assert np.allclose(alphas, result.curve_alphas)
    assert np.allclose(costs[:4], result.curve_costs[:4])
    assert np.isinf(costs[4])


def test_recovery_grid_csv_roundtrip(tmp_path):
    tensions = np.array([5.0, 6.0])
    alphas = np.array([0.0, 0.4, 0.8])
    errors = np.array([[0.01, -0.02, 0.003], [0.0, 0.015, -0.04]])
    path = tmp_path / "grid.csv"
    design.write_recovery_grid_csv(tensions, alphas, errors, path)
    t2, a2, e2 = design.read_recovery_grid_csv(path)
    assert np.allclose(t2, tensions)
    assert np.allclose(a2, alphas)
    assert np.allclose(e2, errors, atol=1e-15)


def test_profile_csv_roundtrip(tmp_path, ref_spec):
    target = design.planted_profile(_problem(ref_spec, tension=5.0), 0.8)
    path = tmp_path / "profile.csv"
    design.write_profile_csv(target, path)
    back = design.read_profile_csv(path)
    assert np.allclose(back.s, target.s, atol=1e-15)
    assert np.allclose(back.u, target.u, atol=1e-15)


def test_profile_csv_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("s_m,ux,uy,uz\n0.0,1.0,0.0,0.0\n")
    with pytest.raises(IoFailure):
        design.read_profile_csv(path)
    path.write_text("wrong,header\n1,2\n")
    with pytest.raises(IoFailure):
        design.read_profile_csv(path)


def test_profile_interpolation_onto_other_grid():
    prof = design.CurvatureProfile(
        s=np.array([0.0, 1.0]), u=np.array([[0.0, 0.0, 0.0], [2.0, 4.0, 6.0]]))
    mid = prof.on_grid(np.array([0.0, 0.5, 1.0]))
    assert np.allclose(mid[1], [1.0, 2.0, 3.0])
