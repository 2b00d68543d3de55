"""Calibration of the rod model against motion-capture and load-cell data.

Pipeline: ADC-to-tension lookup, tension-uniform resampling, seeded
train/test split, per-candidate Young's modulus forward solves, rigid
registration of the capture frame onto the model frame, per-disc bias
correction, and sliding-window test error statistics.
"""

import csv
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import se3
from .errors import (DegenerateGeometry, EmptyDataset, IoFailure,
                     NoConvergence)
from .geometry import disc_layout
from .solver import SolverConfig, _Prepared, _shoot_prepared

FIT_HEADER = ["E_MPa", "cost"]
TEST_ERROR_HEADER = ["s_over_l", "tension_N", "err_mean_m", "err_std_m"]


# ---------------------------------------------------------------------------
# Load cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoadCellTable:
    """Per-cell force/ADC-bit calibration points, force ascending."""

    forces: tuple   # tuple per cell of force values [N]
    bits: tuple     # tuple per cell of ADC readings, strictly increasing

    def __post_init__(self):
        if len(self.forces) != len(self.bits) or not self.forces:
            raise ValueError("need matching force/bit rows for >= 1 cell")
        for f, b in zip(self.forces, self.bits):
            if len(f) != len(b) or len(f) < 2:
                raise ValueError("each cell needs >= 2 (force, bit) rows")
            if any(b[i + 1] <= b[i] for i in range(len(b) - 1)):
                raise ValueError("bits must increase strictly with force")
            if any(f[i + 1] <= f[i] for i in range(len(f) - 1)):
                raise ValueError("forces must be strictly ascending")

    @property
    def cell_count(self):
        return len(self.forces)

    def mean_resolution(self):
        """Average end-to-end slope over cells [N/bit]."""
        slopes = [(f[-1] - f[0]) / (b[-1] - b[0])
                  for f, b in zip(self.forces, self.bits)]
        return float(np.mean(slopes))


def load_cell_table(cells):
    """Builds a table from [(force, bit), ...] row lists, one per cell."""
    forces = tuple(tuple(float(r[0]) for r in cell) for cell in cells)
    bits = tuple(tuple(float(r[1]) for r in cell) for cell in cells)
    return LoadCellTable(forces=forces, bits=bits)


# bench calibration of the three tendon load cells (known weights vs ADC)
FX29_BENCH_TABLE = load_cell_table([
    [(0.000, 98), (1.079, 101), (1.942, 110),
     (2.992, 120), (3.953, 124), (5.042, 142)],
    [(0.000, 100), (0.912, 102), (2.099, 111),
     (3.051, 118), (3.924, 125), (4.993, 136)],
    [(0.000, 100), (0.922, 104), (1.864, 111),
     (2.884, 117), (4.012, 125), (4.689, 129)],
])


def tension_from_adc(table, cell, bit):
    """Tension [N] for a raw ADC reading.

    Piecewise-linear between table rows, end-segment slopes beyond them,
    clamped below at 0 N.
    """
    if not 0 <= cell < table.cell_count:
        raise ValueError(f"cell {cell} out of range")
    f = np.asarray(table.forces[cell])
    b = np.asarray(table.bits[cell])
    bit = float(bit)
    if bit <= b[0]:
        val = f[0] + (f[1] - f[0]) / (b[1] - b[0]) * (bit - b[0])
    elif bit >= b[-1]:
        val = f[-1] + (f[-1] - f[-2]) / (b[-1] - b[-2]) * (bit - b[-1])
    else:
        val = float(np.interp(bit, b, f))
    return max(0.0, float(val))


def write_loadcell_table(table, path):
    """Sections of `force_N,adc_bit` rows, one per cell."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for k in range(table.cell_count):
                fh.write(f"[cell {k + 1}]\n")
                fh.write("force_N,adc_bit\n")
                for f, b in zip(table.forces[k], table.bits[k]):
                    bit = int(b) if float(b).is_integer() else b
                    fh.write(f"{repr(float(f))},{bit}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write load-cell table: {exc}") from exc


def read_loadcell_table(path):
    section = re.compile(r"^\[cell\s+(\d+)\]$")
    cells = []
    current = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                m = section.match(line)
                if m:
                    current = []
                    cells.append(current)
                    continue
                if line == "force_N,adc_bit":
                    continue
                if current is None:
                    raise IoFailure("load-cell rows before any [cell N] header")
                parts = line.split(",")
                if len(parts) != 2:
                    raise IoFailure(f"bad load-cell row: {line!r}")
                current.append((float(parts[0]), float(parts[1])))
    except OSError as exc:
        raise IoFailure(f"cannot read load-cell table: {exc}") from exc
    except ValueError as exc:
        raise IoFailure(f"bad load-cell table: {exc}") from exc
    if not cells:
        raise IoFailure("load-cell table has no cells")
    try:
        return load_cell_table(cells)
    except ValueError as exc:
        raise IoFailure(f"bad load-cell table: {exc}") from exc


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------

@dataclass
class CalibrationDataset:
    """Motion-capture samples: tensions (S, T) [N], marker positions
    (S, D, 3) [m, capture frame], disc arc positions (D,) [m]."""

    tensions: np.ndarray
    markers: np.ndarray
    disc_s: np.ndarray
    times: np.ndarray = None

    def __post_init__(self):
        self.tensions = np.atleast_2d(np.asarray(self.tensions, dtype=float))
        self.markers = np.asarray(self.markers, dtype=float)
        self.disc_s = np.asarray(self.disc_s, dtype=float)
        if self.markers.ndim != 3 or self.markers.shape[2] != 3:
            raise ValueError("markers must have shape (samples, discs, 3)")
        if self.markers.shape[0] != self.tensions.shape[0]:
            raise ValueError("tensions and markers disagree on sample count")
        if self.markers.shape[1] != self.disc_s.size:
            raise ValueError("marker count must match disc count")
        if not np.all(np.isfinite(self.tensions)) or np.any(self.tensions < 0):
            raise ValueError("tensions must be finite and non-negative")
        if self.times is None:
            self.times = np.arange(self.tensions.shape[0], dtype=float)
        else:
            self.times = np.asarray(self.times, dtype=float)

    @property
    def size(self):
        return self.tensions.shape[0]

    def peak_tensions(self):
        """Per-sample actuated tension (max over tendons) [N]."""
        return self.tensions.max(axis=1)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return CalibrationDataset(tensions=self.tensions[idx].copy(),
                                  markers=self.markers[idx].copy(),
                                  disc_s=self.disc_s.copy(),
                                  times=self.times[idx].copy())


def resample_uniform(dataset, bin_width=1.0, seed=42):
    """Equal-count draw per occupied tension bin (without replacement).

    Flattens a tension histogram dominated by dwell at the extremes so the
    fit is not biased toward them.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if dataset.size == 0:
        raise EmptyDataset("cannot resample an empty dataset")
    rng = np.random.default_rng(seed)
    bins = np.floor(dataset.peak_tensions() / bin_width).astype(int)
    occupied = np.unique(bins)
    count = min(int(np.sum(bins == b)) for b in occupied)
    keep = []
    for b in occupied:
        members = np.flatnonzero(bins == b)
        keep.extend(rng.choice(members, size=count, replace=False))
    return dataset.subset(np.sort(keep))


def split_train_test(dataset, fraction=0.7, seed=42):
    """Seeded disjoint split, train size = ceil(fraction * n)."""
    if dataset.size == 0:
        raise EmptyDataset("cannot split an empty dataset")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    n = dataset.size
    n_train = math.ceil(fraction * n)
    perm = np.random.default_rng(seed).permutation(n)
    return (dataset.subset(np.sort(perm[:n_train])),
            dataset.subset(np.sort(perm[n_train:])))


# ---------------------------------------------------------------------------
# Rigid registration and bias
# ---------------------------------------------------------------------------

@dataclass
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        r = self.rotation
        if r.shape != (3, 3) or self.translation.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation length 3")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if np.linalg.det(r) < 0:
            raise ValueError("rotation must be proper (det +1)")

    @staticmethod
    def identity():
        return RigidTransform(np.eye(3), np.zeros(3))

    def apply(self, points):
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def inverse(self):
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)


def register_rigid(capture, model):
    """Least-squares rigid map R, t with R @ capture + t ~= model.

    Closed form via the SVD of the centered cross-covariance, reflection
    corrected so det R = +1.
    """
    capture = np.asarray(capture, dtype=float).reshape(-1, 3)
    model = np.asarray(model, dtype=float).reshape(-1, 3)
    if capture.shape != model.shape:
        raise ValueError("point sets must have matching shapes")
    if capture.shape[0] < 3:
        raise DegenerateGeometry("need at least 3 point pairs")
    cc = capture.mean(axis=0)
    mc = model.mean(axis=0)
    p = capture - cc
    q = model - mc
    sv = np.linalg.svd(p, compute_uv=False)
    if sv[0] < 1e-12 or sv[1] < 1e-8 * sv[0]:
        raise DegenerateGeometry("capture points are collinear")
    u, _, vt = np.linalg.svd(p.T @ q)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(rot, mc - rot @ cc)


@dataclass
class BiasField:
    """Constant per-disc marker offset in the model frame."""

    disc_s: np.ndarray
    delta: np.ndarray  # (D, 3) [m]


def estimate_bias(mapped_capture, model_positions, disc_s):
    """Per-disc mean residual of registered capture vs model, (S, D, 3) in."""
    delta = np.mean(np.asarray(mapped_capture) - np.asarray(model_positions),
                    axis=0)
    return BiasField(disc_s=np.asarray(disc_s, dtype=float), delta=delta)


def _register_and_bias(markers, model_pos, disc_s):
    """One global transform + per-disc bias; returns (transform, bias, cost)."""
    tr = register_rigid(markers.reshape(-1, 3), model_pos.reshape(-1, 3))
    mapped = tr.apply(markers.reshape(-1, 3)).reshape(markers.shape)
    bias = estimate_bias(mapped, model_pos, disc_s)
    resid = mapped - model_pos - bias.delta[None, :, :]
    return tr, bias, float(np.sum(resid * resid))


# ---------------------------------------------------------------------------
# Young's modulus line search
# ---------------------------------------------------------------------------

@dataclass
class TestErrors:
    """Sliding-window test statistics: rows of (s/l, tension center,
    error mean, error std)."""

    rows: np.ndarray
    dropped: int = 0
    total: int = 0


@dataclass
class FitReport:
    youngs_opt: float          # [Pa]
    e_grid: np.ndarray         # [Pa]
    costs: np.ndarray
    transform: RigidTransform
    bias: BiasField
    dropped: int
    total: int
    test_errors: TestErrors = None


def _solve_positions(prep, tensions, disc_s, guesses):
    """Model disc positions per sample; warm-starts and updates guesses.
    Returns (positions (S, D, 3), ok mask)."""
    s_count = tensions.shape[0]
    out = np.zeros((s_count, disc_s.size, 3))
    ok = np.ones(s_count, dtype=bool)
    for k in range(s_count):
        try:
            sol = _shoot_prepared(prep, tensions[k], guesses[k])
        except NoConvergence:
            ok[k] = False
            continue
        guesses[k] = np.concatenate([sol.v[0], sol.u[0]])
        out[k] = sol.position_at(disc_s)
    return out, ok


def linesearch_youngs(train, spec, e_min=50e6, e_max=200e6, e_step=1e6,
                      config=None):
    """Grid search for the Young's modulus minimizing bias-corrected
    registration residuals.

    For each candidate E the whole train set is re-solved (warm-started from
    the previous candidate), one rigid transform is fit over all samples
    jointly, the per-disc bias is subtracted, and the summed squared
    residual scored. Samples whose forward solve fails at any candidate are
    dropped throughout; more than 10% drops aborts the fit.
    """
    config = config or SolverConfig()
    if train.size == 0:
        raise EmptyDataset("cannot fit on an empty train set")
    if not (0 < e_min < e_max and e_step > 0):
        raise ValueError("need 0 < e_min < e_max and e_step > 0")
    e_grid = np.arange(e_min, e_max + 0.5 * e_step, e_step)
    s_count = train.size
    positions = np.zeros((e_grid.size, s_count, train.disc_s.size, 3))
    ok = np.ones(s_count, dtype=bool)
    guesses = [None] * s_count
    for ie, youngs in enumerate(e_grid):
        prep = _Prepared(replace(spec, youngs_modulus=float(youngs)),
                         config, None)
        pos, ok_e = _solve_positions(prep, train.tensions, train.disc_s,
                                     guesses)
        positions[ie] = pos
        ok &= ok_e
    dropped = int(s_count - ok.sum())
    if dropped > 0.1 * s_count:
        raise NoConvergence(
            f"{dropped}/{s_count} samples failed to converge during the fit")
    markers = train.markers[ok]
    costs = np.empty(e_grid.size)
    for ie in range(e_grid.size):
        costs[ie] = _register_and_bias(markers, positions[ie, ok],
                                       train.disc_s)[2]
    best = int(np.argmin(costs))
    transform, bias, _ = _register_and_bias(markers, positions[best, ok],
                                            train.disc_s)
    return FitReport(youngs_opt=float(e_grid[best]), e_grid=e_grid,
                     costs=costs, transform=transform, bias=bias,
                     dropped=dropped, total=s_count)


def evaluate_test(test, spec, youngs, transform, bias, config=None,
                  window=1.0):
    """Held-out error statistics at the fitted modulus.

    Per-disc position error magnitudes aggregated over a +-window [N]
    sliding tension window centered on integer tensions. Non-converging
    samples are skipped and counted.
    """
    config = config or SolverConfig()
    if test.size == 0:
        return TestErrors(rows=np.zeros((0, 4)), dropped=0, total=0)
    prep = _Prepared(replace(spec, youngs_modulus=float(youngs)), config, None)
    guesses = [None] * test.size
    positions, ok = _solve_positions(prep, test.tensions, test.disc_s,
                                     guesses)
    dropped = int(test.size - ok.sum())
    if not np.any(ok):
        raise NoConvergence("no test sample converged at the fitted modulus")
    markers = test.markers[ok]
    mapped = transform.apply(markers.reshape(-1, 3)).reshape(markers.shape)
    resid = mapped - positions[ok] - bias.delta[None, :, :]
    err = np.linalg.norm(resid, axis=2)          # (S_ok, D)
    tau = test.peak_tensions()[ok]
    centers = np.arange(math.floor(tau.min()), math.ceil(tau.max()) + 1.0)
    rows = []
    for k in range(test.disc_s.size):
        s_over_l = test.disc_s[k] / spec.length
        for c in centers:
            mask = np.abs(tau - c) <= window
            if not np.any(mask):
                continue
            rows.append([s_over_l, c, float(np.mean(err[mask, k])),
                         float(np.std(err[mask, k]))])
    return TestErrors(rows=np.array(rows), dropped=dropped,
                      total=int(test.size))


def run_calibration(spec, dataset, e_min=50e6, e_max=200e6, e_step=1e6,
                    split_fraction=0.7, bin_width=1.0, seed=42, config=None):
    """Resample, split, fit, and evaluate; returns the complete FitReport."""
    resampled = resample_uniform(dataset, bin_width=bin_width, seed=seed)
    train, test = split_train_test(resampled, fraction=split_fraction,
                                   seed=seed)
    report = linesearch_youngs(train, spec, e_min=e_min, e_max=e_max,
                               e_step=e_step, config=config)
    report.test_errors = evaluate_test(test, spec, report.youngs_opt,
                                       report.transform, report.bias,
                                       config=config)
    return report


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def _orthogonalize_bias(delta, mean_positions):
    """Removes the component of a bias pattern expressible as a rigid
    motion of the mean disc positions, keeping (R, t, delta) identifiable."""
    d = delta.reshape(-1)
    cols = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        cols.append(np.tile(e, delta.shape[0]))
        cols.append((mean_positions @ se3.hat(e).T).reshape(-1))
    basis = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(basis, d, rcond=None)
    return (d - basis @ coef).reshape(delta.shape)


def synthesize_dataset(spec, youngs, n_samples=200, tension_max=15.0,
                       actuated_tendon=0, noise_sigma=0.0, transform=None,
                       bias_sigma=0.0, seed=42, config=None):
    """Curl/uncurl dataset generated by the model itself.

    Tension ramps 0 -> tension_max -> 0 on one tendon; markers are the model
    disc positions plus an optional per-disc bias (generated orthogonal to
    rigid motions so the fit stays identifiable) and Gaussian noise, mapped
    into a synthetic capture frame. Returns (dataset, truth dict).
    """
    config = config or SolverConfig()
    rng = np.random.default_rng(seed)
    if transform is None:
        transform = RigidTransform(
            se3.rotation_from_rotvec(np.array([0.2, -0.1, 0.3])),
            np.array([0.05, -0.02, 0.03]))
    layout = disc_layout(spec)
    disc_s = layout.positions
    half = n_samples // 2
    ramp = np.concatenate([
        np.linspace(0.0, tension_max, half, endpoint=False),
        np.linspace(tension_max, 0.0, n_samples - half),
    ])
    # cap just below the peak so the top tension bin keeps normal occupancy
    ramp = np.clip(ramp + rng.uniform(0.0, tension_max / n_samples,
                                      size=n_samples),
                   0.0, tension_max - 1e-9)
    tensions = np.zeros((n_samples, spec.tendon_count))
    tensions[:, actuated_tendon] = ramp

    prep = _Prepared(replace(spec, youngs_modulus=float(youngs)), config,
                     None)
    model_pos = np.zeros((n_samples, disc_s.size, 3))
    guess = None
    for k in range(n_samples):
        sol = _shoot_prepared(prep, tensions[k], guess)
        guess = np.concatenate([sol.v[0], sol.u[0]])
        model_pos[k] = sol.position_at(disc_s)

    if bias_sigma > 0:
        delta = rng.normal(0.0, bias_sigma, size=(disc_s.size, 3))
        delta = _orthogonalize_bias(delta, model_pos.mean(axis=0))
    else:
        delta = np.zeros((disc_s.size, 3))
    noisy = model_pos + delta[None, :, :]
    if noise_sigma > 0:
        noisy = noisy + rng.normal(0.0, noise_sigma, size=noisy.shape)
    inv = transform.inverse()
    markers = inv.apply(noisy.reshape(-1, 3)).reshape(noisy.shape)
    dataset = CalibrationDataset(tensions=tensions, markers=markers,
                                 disc_s=disc_s,
                                 times=0.1 * np.arange(n_samples))
    truth = {"youngs": float(youngs), "transform": transform,
             "bias": BiasField(disc_s=disc_s.copy(), delta=delta)}
    return dataset, truth


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

def _dataset_headers(tendon_count, disc_count):
    tau_cols = [f"tau{i + 1}_N" for i in range(tendon_count)]
    marker_cols = [f"m{k + 1}{ax}" for k in range(disc_count)
                   for ax in ("x", "y", "z")]
    long_header = ["t_s"] + tau_cols + ["disc", "index",
                                        "mx_m", "my_m", "mz_m"]
    wide_header = ["t_s"] + tau_cols + marker_cols
    return long_header, wide_header


def write_dataset_csv(dataset, path, wide=True):
    """Wide form: one row per sample (m1x..mDz). Long form: one row per
    disc per sample with explicit disc/index columns."""
    t_count = dataset.tensions.shape[1]
    d_count = dataset.disc_s.size
    long_header, wide_header = _dataset_headers(t_count, d_count)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            if wide:
                writer.writerow(wide_header)
                for k in range(dataset.size):
                    writer.writerow(
                        [repr(float(dataset.times[k]))] +
                        [repr(float(x)) for x in dataset.tensions[k]] +
                        [repr(float(x)) for x in dataset.markers[k].ravel()])
            else:
                writer.writerow(long_header)
                for k in range(dataset.size):
                    for d in range(d_count):
                        writer.writerow(
                            [repr(float(dataset.times[k]))] +
                            [repr(float(x)) for x in dataset.tensions[k]] +
                            [d + 1, k] +
                            [repr(float(x)) for x in dataset.markers[k, d]])
    except OSError as exc:
        raise IoFailure(f"cannot write dataset: {exc}") from exc


def read_dataset_csv(path, disc_s, table=None):
    """Accepts both dataset forms; raw `adcK_bit` columns are converted
    through the load-cell table (cell K maps tendon K)."""
    disc_s = np.asarray(disc_s, dtype=float)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise IoFailure("dataset file is empty")
            rows = [r for r in reader if r]
    except OSError as exc:
        raise IoFailure(f"cannot read dataset: {exc}") from exc
    cols = {name: i for i, name in enumerate(header)}
    if "t_s" not in cols:
        raise IoFailure("dataset header must start with t_s")
    tau_cols = [c for c in header if re.fullmatch(r"tau\d+_N", c)]
    adc_cols = [c for c in header if re.fullmatch(r"adc\d+_bit", c)]
    if adc_cols and table is None:
        raise IoFailure("dataset carries adc bits but no load-cell table "
                        "was given")
    if not tau_cols and not adc_cols:
        raise IoFailure("dataset has neither tauK_N nor adcK_bit columns")
    if not rows:
        raise EmptyDataset("dataset has no samples")

    def tension_row(row):
        if tau_cols:
            return [float(row[cols[c]]) for c in tau_cols]
        return [tension_from_adc(table, i, float(row[cols[c]]))
                for i, c in enumerate(adc_cols)]

    try:
        if "disc" in cols:
            by_index = {}
            for row in rows:
                by_index.setdefault(int(row[cols["index"]]), []).append(row)
            times, tensions, markers = [], [], []
            for idx in sorted(by_index):
                group = sorted(by_index[idx], key=lambda r: int(r[cols["disc"]]))
                discs = [int(r[cols["disc"]]) for r in group]
                if discs != list(range(1, len(group) + 1)):
                    raise IoFailure(f"sample {idx} has disc rows {discs}")
                times.append(float(group[0][cols["t_s"]]))
                tensions.append(tension_row(group[0]))
                markers.append([[float(r[cols[c]]) for c in
                                 ("mx_m", "my_m", "mz_m")] for r in group])
        else:
            marker_cols = [c for c in header if re.fullmatch(r"m\d+[xyz]", c)]
            d_count = len(marker_cols) // 3
            if d_count == 0 or len(marker_cols) != 3 * d_count:
                raise IoFailure("wide dataset needs m1x..mDz columns")
            ordered = [f"m{k + 1}{ax}" for k in range(d_count)
                       for ax in ("x", "y", "z")]
            if any(c not in cols for c in ordered):
                raise IoFailure("wide dataset marker columns are not "
                                "m1x..mDz")
            times, tensions, markers = [], [], []
            for row in rows:
                times.append(float(row[cols["t_s"]]))
                tensions.append(tension_row(row))
                markers.append(np.array(
                    [float(row[cols[c]]) for c in ordered]).reshape(-1, 3))
    except (ValueError, IndexError) as exc:
        raise IoFailure(f"bad dataset row: {exc}") from exc
    markers = np.asarray(markers, dtype=float)
    if markers.shape[1] != disc_s.size:
        raise IoFailure(f"dataset has {markers.shape[1]} discs but the "
                        f"geometry defines {disc_s.size}")
    return CalibrationDataset(tensions=np.asarray(tensions), markers=markers,
                              disc_s=disc_s, times=np.asarray(times))


def write_fit_csv(report, path):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(FIT_HEADER)
            for youngs, cost in zip(report.e_grid, report.costs):
                writer.writerow([repr(float(youngs / 1e6)),
                                 repr(float(cost))])
    except OSError as exc:
        raise IoFailure(f"cannot write fit csv: {exc}") from exc


def read_fit_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != FIT_HEADER:
                raise IoFailure(f"unexpected fit csv header: {header}")
            data = np.array([[float(x) for x in row] for row in reader])
    except OSError as exc:
        raise IoFailure(f"cannot read fit csv: {exc}") from exc
    return data[:, 0], data[:, 1]


def write_test_errors_csv(test_errors, path):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TEST_ERROR_HEADER)
            for row in test_errors.rows:
                writer.writerow([repr(float(x)) for x in row])
    except OSError as exc:
        raise IoFailure(f"cannot write test errors: {exc}") from exc


def read_test_errors_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != TEST_ERROR_HEADER:
                raise IoFailure(f"unexpected test error header: {header}")
            return np.array([[float(x) for x in row] for row in reader])
    except OSError as exc:
        raise IoFailure(f"cannot read test errors: {exc}") from exc
