import math

import numpy as np
import pytest

import taperod
from taperod import calibration as cal
from taperod import se3
from taperod.errors import (DegenerateGeometry, EmptyDataset, IoFailure,
                            NoConvergence)

BENCH_ROWS = [
    [(0.000, 98), (1.079, 101), (1.942, 110),
     (2.992, 120), (3.953, 124), (5.042, 142)],
    [(0.000, 100), (0.912, 102), (2.099, 111),
     (3.051, 118), (3.924, 125), (4.993, 136)],
    [(0.000, 100), (0.922, 104), (1.864, 111),
     (2.884, 117), (4.012, 125), (4.689, 129)],
]


# --- load cell table ---------------------------------------------------------

def test_bench_table_rows_match_reference():
    table = cal.FX29_BENCH_TABLE
    assert table.cell_count == 3
    for k, expect in enumerate(BENCH_ROWS):
        assert table.forces[k] == tuple(f for f, _ in expect)
        assert table.bits[k] == tuple(float(b) for _, b in expect)


def test_interpolation_between_calibration_points():
    got = cal.tension_from_adc(cal.FX29_BENCH_TABLE, 0, 104)
    expect = 1.079 + (104 - 101) * (1.942 - 1.079) / (110 - 101)
    assert math.isclose(got, expect, rel_tol=1e-12)
    assert abs(got - 1.367) <= 1e-3


def test_extrapolation_clamps_and_extends():
    table = cal.FX29_BENCH_TABLE
    assert cal.tension_from_adc(table, 0, 98) == 0.0
    assert cal.tension_from_adc(table, 0, 60) == 0.0   # clamped, not negative
    above = cal.tension_from_adc(table, 0, 150)
    expect = 5.042 + (150 - 142) * (5.042 - 3.953) / (142 - 124)
    assert math.isclose(above, expect, rel_tol=1e-12)


def test_tension_monotone_in_bits():
    vals = [cal.tension_from_adc(cal.FX29_BENCH_TABLE, 1, b)
            for b in range(100, 137)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_cell_index_validation():
    with pytest.raises(ValueError):
        cal.tension_from_adc(cal.FX29_BENCH_TABLE, 3, 100)
    with pytest.raises(ValueError):
        cal.tension_from_adc(cal.FX29_BENCH_TABLE, -1, 100)


def test_mean_resolution_is_mean_endpoint_slope():
    slopes = [(5.042 - 0.0) / (142 - 98),
              (4.993 - 0.0) / (136 - 100),
              (4.689 - 0.0) / (129 - 100)]
    assert math.isclose(cal.FX29_BENCH_TABLE.mean_resolution(),
                        sum(slopes) / 3, rel_tol=1e-12)


def test_table_rejects_bad_rows():
    with pytest.raises(ValueError):
        cal.load_cell_table([[(0.0, 100)]])
    with pytest.raises(ValueError):
        cal.load_cell_table([[(0.0, 100), (1.0, 100)]])   # flat bits
    with pytest.raises(ValueError):
        cal.load_cell_table([[(1.0, 100), (0.5, 110)]])   # force descends


def test_loadcell_file_roundtrip(tmp_path):
    path = tmp_path / "cells.txt"
    cal.write_loadcell_table(cal.FX29_BENCH_TABLE, path)
    back = cal.read_loadcell_table(path)
    assert back.forces == cal.FX29_BENCH_TABLE.forces
    assert back.bits == cal.FX29_BENCH_TABLE.bits


def test_loadcell_file_rejects_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("force_N,adc_bit\n1.0,100\n")
    with pytest.raises(IoFailure):
        cal.read_loadcell_table(path)
    path.write_text("[cell 1]\nforce_N,adc_bit\n1.0\n")
    with pytest.raises(IoFailure):
        cal.read_loadcell_table(path)
    path.write_text("")
    with pytest.raises(IoFailure):
        cal.read_loadcell_table(path)


# --- dataset container and sampling -----------------------------------------

def _toy_dataset(tensions_1d, disc_count=2, seed=0):
    rng = np.random.default_rng(seed)
    n = len(tensions_1d)
    tensions = np.zeros((n, 3))
    tensions[:, 0] = tensions_1d
    return cal.CalibrationDataset(
        tensions=tensions,
        markers=rng.normal(size=(n, disc_count, 3)),
        disc_s=np.linspace(0.1, 0.3, disc_count))


def test_dataset_validation():
    good = _toy_dataset([1.0, 2.0])
    assert good.size == 2
    assert np.allclose(good.peak_tensions(), [1.0, 2.0])
    with pytest.raises(ValueError):
        cal.CalibrationDataset(tensions=np.zeros((2, 3)),
                               markers=np.zeros((3, 2, 3)),
                               disc_s=np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        cal.CalibrationDataset(tensions=np.zeros((2, 3)),
                               markers=np.zeros((2, 3, 3)),
                               disc_s=np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        cal.CalibrationDataset(tensions=np.full((2, 3), -1.0),
                               markers=np.zeros((2, 2, 3)),
                               disc_s=np.array([0.1, 0.2]))


def test_dataset_subset_keeps_alignment():
    ds = _toy_dataset([0.0, 1.0, 2.0, 3.0])
    sub = ds.subset(np.array([1, 3]))
    assert sub.size == 2
    assert np.allclose(sub.peak_tensions(), [1.0, 3.0])
    assert np.allclose(sub.markers, ds.markers[[1, 3]])
    assert np.allclose(sub.times, ds.times[[1, 3]])


def test_resample_equalizes_tension_bins():
    # 40 dwell samples near zero, 5 in each of two higher bins
    tensions = [0.1] * 40 + [3.5] * 5 + [5.2] * 5
    ds = _toy_dataset(tensions)
    flat = cal.resample_uniform(ds, bin_width=1.0, seed=42)
    bins = np.floor(flat.peak_tensions()).astype(int)
    counts = {b: int(np.sum(bins == b)) for b in np.unique(bins)}
    assert counts == {0: 5, 3: 5, 5: 5}
    again = cal.resample_uniform(ds, bin_width=1.0, seed=42)
    assert np.array_equal(flat.markers, again.markers)


def test_resample_validation():
    ds = _toy_dataset([1.0, 2.0])
    with pytest.raises(ValueError):
        cal.resample_uniform(ds, bin_width=0.0)
    empty = ds.subset(np.array([], dtype=int))
    with pytest.raises(EmptyDataset):
        cal.resample_uniform(empty)


def test_split_is_disjoint_and_exhaustive():
    ds = _toy_dataset(list(range(10)))
    train, test = cal.split_train_test(ds, fraction=0.7, seed=42)
    assert train.size == 7 and test.size == 3
    t_ids = [tuple(m.ravel()) for m in train.markers]
    s_ids = [tuple(m.ravel()) for m in test.markers]
    all_ids = [tuple(m.ravel()) for m in ds.markers]
    assert sorted(t_ids + s_ids) == sorted(all_ids)
    assert not set(t_ids) & set(s_ids)
    train2, _ = cal.split_train_test(ds, fraction=0.7, seed=42)
    assert np.array_equal(train.markers, train2.markers)


def test_split_validation():
    ds = _toy_dataset([1.0, 2.0])
    with pytest.raises(ValueError):
        cal.split_train_test(ds, fraction=0.0)
    with pytest.raises(ValueError):
        cal.split_train_test(ds, fraction=1.2)
    train, test = cal.split_train_test(ds, fraction=1.0)
    assert train.size == 2 and test.size == 0
    with pytest.raises(EmptyDataset):
        cal.split_train_test(ds.subset(np.array([], dtype=int)))


# --- rigid registration and bias ---------------------------------------------

def _true_transform():
    return cal.RigidTransform(
        se3.rotation_from_rotvec(np.array([0.3, -0.2, 0.5])),
        np.array([0.04, -0.01, 0.02]))


def test_rigid_transform_validation():
    with pytest.raises(ValueError):
        cal.RigidTransform(np.eye(3) * 1.001, np.zeros(3))
    refl = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        cal.RigidTransform(refl, np.zeros(3))
    tr = _true_transform()
    pts = np.random.default_rng(0).normal(size=(8, 3))
    assert np.allclose(tr.inverse().apply(tr.apply(pts)), pts, atol=1e-12)
    assert np.allclose(cal.RigidTransform.identity().apply(pts), pts)


def test_register_rigid_recovers_planted_transform():
    rng = np.random.default_rng(1)
    model_pts = rng.normal(scale=0.2, size=(20, 3))
    tr = _true_transform()
    capture = tr.inverse().apply(model_pts)
    est = cal.register_rigid(capture, model_pts)
    assert np.max(np.abs(est.rotation - tr.rotation)) < 1e-10
    assert np.max(np.abs(est.translation - tr.translation)) < 1e-10
    assert np.allclose(est.apply(capture), model_pts, atol=1e-10)


def test_register_rigid_tolerates_small_noise():
    rng = np.random.default_rng(2)
    model_pts = rng.normal(scale=0.2, size=(50, 3))
    tr = _true_transform()
    capture = tr.inverse().apply(model_pts) + rng.normal(scale=1e-6,
                                                         size=(50, 3))
    est = cal.register_rigid(capture, model_pts)
    assert np.max(np.abs(est.rotation - tr.rotation)) < 1e-4
    rtr = est.rotation @ est.rotation.T
    assert np.max(np.abs(rtr - np.eye(3))) < 1e-12   # still orthonormal


def test_register_rigid_rejects_degenerate_clouds():
    line = np.outer(np.linspace(0, 1, 10), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(DegenerateGeometry):
        cal.register_rigid(line, line)
    two = np.array([[0.0, 0, 0], [1.0, 0, 0]])
    with pytest.raises(DegenerateGeometry):
        cal.register_rigid(two, two)


def test_estimate_bias_recovers_planted_offsets():
    rng = np.random.default_rng(3)
    model_pos = rng.normal(size=(30, 4, 3))
    delta = np.array([[0.001, 0, 0], [0, -0.002, 0],
                      [0, 0, 0.0015], [0.0005, 0.0005, 0]])
    mapped = model_pos + delta[None, :, :]
    disc_s = np.linspace(0.05, 0.3, 4)
    bias = cal.estimate_bias(mapped, model_pos, disc_s)
    assert np.allclose(bias.delta, delta, atol=1e-12)
    shuffled = rng.permutation(30)
    bias2 = cal.estimate_bias(mapped[shuffled], model_pos[shuffled], disc_s)
    assert np.allclose(bias2.delta, bias.delta, atol=1e-12)


def test_orthogonalized_bias_has_no_rigid_component():
    rng = np.random.default_rng(4)
    centers = rng.normal(scale=0.1, size=(6, 3))
    # pure translation and pure rotation patterns must vanish
    translation = np.tile(np.array([0.002, -0.001, 0.003]), (6, 1))
    assert np.max(np.abs(cal._orthogonalize_bias(translation, centers))) < 1e-12
    omega = np.array([0.01, 0.02, -0.015])
    spin = centers @ se3.hat(omega).T
    assert np.max(np.abs(cal._orthogonalize_bias(spin, centers))) < 1e-12
    # arbitrary patterns come out orthogonal to both families
    raw = rng.normal(scale=1e-3, size=(6, 3))
    clean = cal._orthogonalize_bias(raw, centers)
    assert np.max(np.abs(clean.mean(axis=0))) < 1e-12
    torque = np.einsum("dk,dkj->j", clean,
                       np.stack([se3.hat(c) for c in centers]))
    assert np.max(np.abs(torque)) < 1e-12


# --- modulus line search ------------------------------------------------------

FAST = taperod.SolverConfig(grid_steps=100)


def test_linesearch_recovers_planted_modulus(ref_spec):
    ds, truth = cal.synthesize_dataset(ref_spec, 120e6, n_samples=60,
                                       tension_max=12.0, seed=1, config=FAST)
    report = cal.linesearch_youngs(ds, ref_spec, e_min=100e6, e_max=140e6,
                                   e_step=5e6, config=FAST)
    assert report.youngs_opt == 120e6
    assert report.dropped == 0 and report.total == 60
    best = int(np.argmin(report.costs))
    assert np.all(np.diff(report.costs[:best + 1]) < 0)
    assert np.all(np.diff(report.costs[best:]) > 0)
    # clean data: the capture frame and bias come back almost exactly
    assert np.max(np.abs(report.transform.rotation
                         - truth["transform"].rotation)) < 1e-7
    assert np.max(np.abs(report.transform.translation
                         - truth["transform"].translation)) < 1e-8
    assert np.max(np.abs(report.bias.delta)) < 1e-8


def test_linesearch_validation(ref_spec):
    ds = _toy_dataset([1.0, 2.0])
    with pytest.raises(ValueError):
        cal.linesearch_youngs(ds, ref_spec, e_min=100e6, e_max=50e6)
    empty = ds.subset(np.array([], dtype=int))
    with pytest.raises(EmptyDataset):
        cal.linesearch_youngs(empty, ref_spec)


def _poisoned(ref_spec, n_bad):
    ds, _ = cal.synthesize_dataset(ref_spec, 120e6, n_samples=12,
                                   tension_max=8.0, seed=2, config=FAST)
    tensions = ds.tensions.copy()
    tensions[:n_bad, 0] = 1e5   # hopeless forward solves
    return cal.CalibrationDataset(tensions=tensions, markers=ds.markers,
                                  disc_s=ds.disc_s, times=ds.times)


STRICT = taperod.SolverConfig(grid_steps=100, newton_max_iter=4,
                              continuation_steps=2)


def test_linesearch_aborts_on_heavy_drops(ref_spec):
    with pytest.raises(NoConvergence):
        cal.linesearch_youngs(_poisoned(ref_spec, 2), ref_spec,
                              e_min=110e6, e_max=130e6, e_step=10e6,
                              config=STRICT)


def test_linesearch_tolerates_light_drops(ref_spec):
    report = cal.linesearch_youngs(_poisoned(ref_spec, 1), ref_spec,
                                   e_min=110e6, e_max=130e6, e_step=10e6,
                                   config=STRICT)
    assert report.dropped == 1 and report.total == 12
    assert report.youngs_opt == 120e6


def test_evaluate_test_near_zero_on_clean_data(ref_spec):
    ds, truth = cal.synthesize_dataset(ref_spec, 120e6, n_samples=20,
                                       tension_max=10.0, seed=3, config=FAST)
    errs = cal.evaluate_test(ds, ref_spec, 120e6, truth["transform"],
                             truth["bias"], config=FAST)
    assert errs.total == 20 and errs.dropped == 0
    assert errs.rows.shape[1] == 4
    assert np.max(errs.rows[:, 2]) < 1e-9
    s_over_l = np.unique(errs.rows[:, 0])
    assert np.allclose(s_over_l, np.sort(ds.disc_s) / ref_spec.length)


def test_evaluate_test_empty_dataset(ref_spec):
    ds = _toy_dataset([1.0, 2.0])
    empty = ds.subset(np.array([], dtype=int))
    errs = cal.evaluate_test(empty, ref_spec, 120e6,
                             cal.RigidTransform.identity(),
                             cal.BiasField(disc_s=ds.disc_s,
                                           delta=np.zeros((2, 3))),
                             config=FAST)
    assert errs.rows.shape == (0, 4) and errs.total == 0


def test_run_calibration_end_to_end(ref_spec):
    ds, _ = cal.synthesize_dataset(ref_spec, 120e6, n_samples=40,
                                   tension_max=10.0, noise_sigma=1e-4,
                                   bias_sigma=3e-4, seed=5, config=FAST)
    report = cal.run_calibration(ref_spec, ds, e_min=110e6, e_max=130e6,
                                 e_step=5e6, seed=5, config=FAST)
    assert report.youngs_opt == 120e6
    assert report.dropped == 0
    assert report.test_errors is not None
    assert report.test_errors.rows.size > 0
    assert np.max(report.test_errors.rows[:, 2]) < 5e-3


# --- synthetic data properties ------------------------------------------------

def test_synthesized_dataset_is_deterministic(ref_spec):
    a, _ = cal.synthesize_dataset(ref_spec, 100e6, n_samples=10,
                                  tension_max=6.0, noise_sigma=1e-4,
                                  bias_sigma=1e-4, seed=7, config=FAST)
    b, _ = cal.synthesize_dataset(ref_spec, 100e6, n_samples=10,
                                  tension_max=6.0, noise_sigma=1e-4,
                                  bias_sigma=1e-4, seed=7, config=FAST)
    assert np.array_equal(a.markers, b.markers)
    assert np.array_equal(a.tensions, b.tensions)
    assert np.allclose(a.times, 0.1 * np.arange(10))
    assert a.tensions.max() < 6.0
    assert a.tensions.min() >= 0.0


def test_synthesized_bias_stays_identifiable(ref_spec):
    _, truth = cal.synthesize_dataset(ref_spec, 100e6, n_samples=10,
                                      tension_max=6.0, bias_sigma=1e-3,
                                      seed=8, config=FAST)
    delta = truth["bias"].delta
    assert np.max(np.abs(delta)) > 1e-5          # actually planted something
    assert np.max(np.abs(delta.mean(axis=0))) < 1e-12


# --- file formats --------------------------------------------------------------

def test_dataset_csv_wide_roundtrip(tmp_path):
    ds = _toy_dataset([0.5, 1.5, 2.5])
    path = tmp_path / "wide.csv"
    cal.write_dataset_csv(ds, path, wide=True)
    back = cal.read_dataset_csv(path, ds.disc_s)
    assert np.array_equal(back.tensions, ds.tensions)
    assert np.array_equal(back.markers, ds.markers)
    assert np.array_equal(back.times, ds.times)


def test_dataset_csv_long_roundtrip(tmp_path):
    ds = _toy_dataset([0.5, 1.5, 2.5], disc_count=3)
    path = tmp_path / "long.csv"
    cal.write_dataset_csv(ds, path, wide=False)
    back = cal.read_dataset_csv(path, ds.disc_s)
    assert np.array_equal(back.tensions, ds.tensions)
    assert np.array_equal(back.markers, ds.markers)


def test_dataset_csv_adc_conversion(tmp_path):
    path = tmp_path / "adc.csv"
    path.write_text(
        "t_s,adc1_bit,adc2_bit,adc3_bit,m1x,m1y,m1z,m2x,m2y,m2z\n"
        "0.0,104,100,100,0.0,0.0,0.1,0.0,0.0,0.2\n"
        "0.1,110,102,104,0.01,0.0,0.1,0.02,0.0,0.2\n")
    ds = cal.read_dataset_csv(path, np.array([0.1, 0.2]),
                              table=cal.FX29_BENCH_TABLE)
    assert math.isclose(ds.tensions[0, 0],
                        cal.tension_from_adc(cal.FX29_BENCH_TABLE, 0, 104))
    assert ds.tensions[0, 1] == 0.0
    assert math.isclose(ds.tensions[1, 2],
                        cal.tension_from_adc(cal.FX29_BENCH_TABLE, 2, 104))
    with pytest.raises(IoFailure):
        cal.read_dataset_csv(path, np.array([0.1, 0.2]))   # no table given


def test_dataset_csv_error_paths(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_s,m1x,m1y,m1z\n0.0,0,0,0\n")
    with pytest.raises(IoFailure):   # no tension columns
        cal.read_dataset_csv(path, np.array([0.1]))
    path.write_text("t_s,tau1_N,m1x,m1y,m1z\n")
    with pytest.raises(EmptyDataset):
        cal.read_dataset_csv(path, np.array([0.1]))
    path.write_text("t_s,tau1_N,disc,index,mx_m,my_m,mz_m\n"
                    "0.0,1.0,2,0,0,0,0\n")
    with pytest.raises(IoFailure):   # disc rows must cover 1..D
        cal.read_dataset_csv(path, np.array([0.1]))
    ds = _toy_dataset([1.0])
    out = tmp_path / "wide.csv"
    cal.write_dataset_csv(ds, out, wide=True)
    with pytest.raises(IoFailure):   # disc count mismatch
        cal.read_dataset_csv(out, np.array([0.1, 0.2, 0.3]))


def test_fit_csv_roundtrip(tmp_path):
    report = cal.FitReport(
        youngs_opt=120e6, e_grid=np.array([100e6, 120e6, 140e6]),
        costs=np.array([3.0, 1.0, 2.0]),
        transform=cal.RigidTransform.identity(),
        bias=cal.BiasField(disc_s=np.array([0.1]), delta=np.zeros((1, 3))),
        dropped=0, total=10)
    path = tmp_path / "fit.csv"
    cal.write_fit_csv(report, path)
    e_mpa, costs = cal.read_fit_csv(path)
    assert np.allclose(e_mpa, [100.0, 120.0, 140.0])
    assert np.allclose(costs, report.costs)


def test_test_errors_csv_roundtrip(tmp_path):
    errs = cal.TestErrors(rows=np.array([[0.1, 5.0, 1e-4, 2e-5],
                                         [0.2, 5.0, 2e-4, 1e-5]]),
                          dropped=0, total=4)
    path = tmp_path / "errors.csv"
    cal.write_test_errors_csv(errs, path)
    back = cal.read_test_errors_csv(path)
    assert np.allclose(back, errs.rows, atol=1e-15)
