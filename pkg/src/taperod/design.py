"""Taper/tension exploration and inverse taper design.

The design problem: given a desired curvature profile u_d(s) and a fixed
tendon tension, find the taper angle alpha whose equilibrium curvature
matches it best in the integrated-squared sense. The cost is sampled on a
coarse grid first (doubles as the exportable cost curve), checked for
unimodality, then refined by golden-section search.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IoFailure, NoConvergence, NonUnimodal, NotConverged
from .geometry import spec_from_taper
from .solver import SolverConfig, _Prepared, _shoot_prepared, solve_tension_sweep
from . import model

GOLDEN_TOL_DEG = 1e-3
SCAN_POINTS = 41
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class CurvatureProfile:
    """Desired angular strain u_d on a uniform grid over [0, length]."""

    s: np.ndarray
    u: np.ndarray  # (n, 3) [1/m]

    def on_grid(self, s_target):
        if self.s.shape == s_target.shape and np.allclose(self.s, s_target):
            return self.u
        return np.column_stack([
            np.interp(s_target, self.s, self.u[:, k]) for k in range(3)
        ])


@dataclass
class DesignProblem:
    base_spec: object              # tip radius is overridden per candidate
    tension: float                 # actuated tendon tension [N]
    actuated_tendon: int = 0
    alpha_bounds: tuple = (0.0, 2.0)   # degrees
    noise: float = 0.0             # element-wise multiplicative half-width
    seed: int = 42
    config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        lo, hi = self.alpha_bounds
        if not (0.0 <= lo < hi):
            raise ValueError("need 0 <= alpha_min < alpha_max")
        if self.tension < 0:
            raise ValueError("tension must be non-negative")
        if not 0 <= self.actuated_tendon < self.base_spec.tendon_count:
            raise ValueError("actuated_tendon out of range")

    def tension_vector(self):
        tau = np.zeros(self.base_spec.tendon_count)
        tau[self.actuated_tendon] = self.tension
        return tau


@dataclass
class DesignResult:
    alpha_opt_deg: float
    cost: float
    curve_alphas: np.ndarray   # coarse scan samples, for plotting
    curve_costs: np.ndarray


def curvature_of(solution):
    """Angular strain profile of a converged solution."""
    if not solution.converged:
        raise NotConverged("curvature profile requires a converged solution")
    return CurvatureProfile(s=solution.s.copy(), u=solution.u.copy())


def _solve_at_alpha(problem, alpha, guess=None):
    spec = spec_from_taper(problem.base_spec, alpha)
    prep = _Prepared(spec, problem.config, None)
    return _shoot_prepared(prep, problem.tension_vector(), guess)


def _profile_cost(solution, u_d):
    ud = u_d.on_grid(solution.s)
    dev = solution.u - ud
    return float(np.trapezoid(np.sum(dev * dev, axis=1), solution.s))


def design_cost(problem, alpha, u_d):
    """J(alpha) = integral of |u(s, alpha) - u_d(s)|^2 over s (trapezoidal).

    Requires alpha within the problem bounds and a converging forward solve.
    """
    lo, hi = problem.alpha_bounds
    if not (lo <= alpha <= hi):
        raise ValueError(f"alpha {alpha} outside bounds {problem.alpha_bounds}")
    solution = _solve_at_alpha(problem, alpha)
    return _profile_cost(solution, u_d)


def planted_profile(problem, alpha_plant, rng=None):
    """Target profile from a forward solve at a known taper angle.

    With problem.noise > 0, every component is scaled by an independent
    uniform draw from [1-noise, 1+noise] (seeded), mimicking a noisy
    curvature estimate.
    """
    solution = _solve_at_alpha(problem, alpha_plant)
    u = solution.u.copy()
    if problem.noise > 0:
        rng = rng or np.random.default_rng(problem.seed)
        u *= rng.uniform(1.0 - problem.noise, 1.0 + problem.noise, size=u.shape)
    return CurvatureProfile(s=solution.s.copy(), u=u)


def _separated_minima(costs, rel_barrier=0.01):
    """Indices of local minima separated by a barrier above rel_barrier of
    the finite cost range. Used to reject non-unimodal scans."""
    finite = np.isfinite(costs)
    if not np.any(finite):
        return []
    lo = np.min(costs[finite])
    hi = np.max(costs[finite])
    barrier = (hi - lo) * rel_barrier
    minima = []
    n = len(costs)
    for i in range(n):
        c = costs[i]
        if not np.isfinite(c):
            continue
        left = costs[i - 1] if i > 0 else np.inf
        right = costs[i + 1] if i < n - 1 else np.inf
        if c <= left and c <= right:
            minima.append(i)
    if len(minima) <= 1:
        return minima
    # merge minima not separated by a real barrier
    separated = [minima[0]]
    for idx in minima[1:]:
        prev = separated[-1]
        between = costs[prev:idx + 1]
        peak = np.max(between[np.isfinite(between)])
        if peak > max(costs[prev], costs[idx]) + barrier:
            separated.append(idx)
        else:
            if costs[idx] < costs[prev]:
                separated[-1] = idx
    return separated


def _golden_section(f, lo, hi, tol):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def optimize_taper(problem, u_d):
    """Best taper angle for a target curvature profile.

    Scans SCAN_POINTS angles over the bounds (exported as the cost curve),
    verifies the scan is unimodal, then refines around the best sample with
    golden-section search to 1e-3 degrees. Angles whose forward solve fails
    or whose geometry is infeasible score +inf.
    """
    lo, hi = problem.alpha_bounds
    alphas = np.linspace(lo, hi, SCAN_POINTS)
    costs = np.empty(SCAN_POINTS)
    evals = []
    guess = {"x": None}

    def cost_at(alpha):
        try:
            sol = _solve_at_alpha(problem, alpha, guess["x"])
        except (ValueError, NoConvergence):
            return math.inf
        guess["x"] = np.concatenate([sol.v[0], sol.u[0]])
        j = _profile_cost(sol, u_d)
        evals.append((alpha, j))
        return j

    for i, alpha in enumerate(alphas):
        costs[i] = cost_at(alpha)
    if not np.any(np.isfinite(costs)):
        raise NoConvergence("no feasible taper angle in bounds")
    minima = _separated_minima(costs)
    if len(minima) > 1:
        raise NonUnimodal(
            f"cost scan shows {len(minima)} separated minima",
            alphas=alphas, costs=costs.copy())
    best = int(np.nanargmin(np.where(np.isfinite(costs), costs, np.nan)))
    bra = alphas[max(best - 1, 0)]
    brb = alphas[min(best + 1, SCAN_POINTS - 1)]
    if brb > bra:
        _golden_section(cost_at, bra, brb, GOLDEN_TOL_DEG)
    alpha_opt, cost_opt = min(evals, key=lambda e: e[1])
    return DesignResult(alpha_opt_deg=float(alpha_opt), cost=float(cost_opt),
                        curve_alphas=alphas, curve_costs=costs)


def planted_recovery_grid(base_spec, tensions, alphas_deg, noise=0.5,
                          seed=42, bounds=(0.0, 2.0), config=None):
    """Plant-and-recover study over a tension x taper grid.

    For each cell, generates a noisy target profile at the planted angle and
    reports alpha_opt - alpha_plant [deg]. Returns (errors (len(tensions),
    len(alphas)), results grid).
    """
    config = config or SolverConfig()
    rng = np.random.default_rng(seed)
    errors = np.empty((len(tensions), len(alphas_deg)))
    results = []
    for i, tension in enumerate(tensions):
        row = []
        for j, alpha in enumerate(alphas_deg):
            problem = DesignProblem(base_spec=base_spec, tension=float(tension),
                                    alpha_bounds=bounds, noise=noise,
                                    seed=seed, config=config)
            u_d = planted_profile(problem, alpha, rng=rng)
            result = optimize_taper(problem, u_d)
            errors[i, j] = result.alpha_opt_deg - alpha
            row.append(result)
        results.append(row)
    return errors, results


def taper_tension_sweep(base_spec, alphas_deg, tensions, loads=None,
                        config=None, actuated_tendon=0):
    """Forward solves over a taper x tension grid (single actuated tendon).

    Returns a list of (alpha_deg, tension, RodSolution), tension varying
    fastest with warm starts along each tension ramp.
    """
    config = config or SolverConfig()
    cells = []
    for alpha in alphas_deg:
        spec = spec_from_taper(base_spec, alpha)
        schedule = np.zeros((len(tensions), spec.tendon_count))
        schedule[:, actuated_tendon] = tensions
        sols = solve_tension_sweep(spec, schedule, loads, config)
        for tension, sol in zip(tensions, sols):
            cells.append((float(alpha), float(tension), sol))
    return cells


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

SWEEP_HEADER = ["alpha_deg", "tension_N", "s_m", "px", "py", "pz",
                "ux", "uy", "uz"]
COST_CURVE_HEADER = ["alpha_deg", "cost"]
PROFILE_HEADER = ["s_m", "ux", "uy", "uz"]


def write_sweep_csv(cells, path):
    """One row per grid cell per arc-length sample."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_HEADER)
            for alpha, tension, sol in cells:
                if sol is None:
                    continue
                for i in range(sol.s.size):
                    writer.writerow([repr(float(x)) for x in (
                        alpha, tension, sol.s[i], *sol.p[i], *sol.u[i])])
    except OSError as exc:
        raise IoFailure(f"cannot write sweep csv: {exc}") from exc


def read_sweep_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != SWEEP_HEADER:
                raise IoFailure(f"unexpected sweep csv header: {header}")
            return np.array([[float(x) for x in row] for row in reader])
    except OSError as exc:
        raise IoFailure(f"cannot read sweep csv: {exc}") from exc


def write_cost_curve_csv(result, path):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(COST_CURVE_HEADER)
            for alpha, cost in zip(result.curve_alphas, result.curve_costs):
                writer.writerow([repr(float(alpha)), repr(float(cost))])
    except OSError as exc:
        raise IoFailure(f"cannot write cost curve: {exc}") from exc


def read_cost_curve_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != COST_CURVE_HEADER:
                raise IoFailure(f"unexpected cost curve header: {header}")
            data = np.array([[float(x) for x in row] for row in reader])
    except OSError as exc:
        raise IoFailure(f"cannot read cost curve: {exc}") from exc
    return data[:, 0], data[:, 1]


def write_recovery_grid_csv(tensions, alphas_deg, errors, path):
    """Tension x alpha matrix of recovery errors [deg]."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tension_N"] +
                            [f"err_deg_alpha_{repr(float(a))}"
                             for a in alphas_deg])
            for i, tension in enumerate(tensions):
                writer.writerow([repr(float(tension))] +
                                [repr(float(e)) for e in errors[i]])
    except OSError as exc:
        raise IoFailure(f"cannot write recovery grid: {exc}") from exc


def read_recovery_grid_csv(path):
    """Returns (tensions, alphas_deg, errors)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            prefix = "err_deg_alpha_"
            if header[0] != "tension_N" or not all(
                    c.startswith(prefix) for c in header[1:]):
                raise IoFailure(f"unexpected recovery grid header: {header}")
            alphas = np.array([float(c[len(prefix):]) for c in header[1:]])
            data = np.array([[float(x) for x in row] for row in reader])
    except OSError as exc:
        raise IoFailure(f"cannot read recovery grid: {exc}") from exc
    except ValueError as exc:
        raise IoFailure(f"bad recovery grid: {exc}") from exc
    return data[:, 0], alphas, data[:, 1:]


def write_profile_csv(profile, path):
    """Target curvature profile rows `s_m,ux,uy,uz`."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(PROFILE_HEADER)
            for i in range(profile.s.size):
                writer.writerow([repr(float(x)) for x in
                                 (profile.s[i], *profile.u[i])])
    except OSError as exc:
        raise IoFailure(f"cannot write profile csv: {exc}") from exc


def read_profile_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != PROFILE_HEADER:
                raise IoFailure(f"unexpected profile header: {header}")
            data = np.array([[float(x) for x in row] for row in reader])
    except OSError as exc:
        raise IoFailure(f"cannot read profile csv: {exc}") from exc
    except ValueError as exc:
        raise IoFailure(f"bad profile csv: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 4 or data.shape[0] < 2:
        raise IoFailure("profile csv needs >= 2 rows of s_m,ux,uy,uz")
    return CurvatureProfile(s=data[:, 0], u=data[:, 1:4])
