"""Boundary value problem solver: integrate + single shooting.

The rod is clamped at the base (p(0)=0, R(0)=I) and loaded at the tip. The
shooting unknowns are the proximal strains (v(0), u(0)); the residual is the
tip force/moment mismatch. Tendons terminate at the distal disc, so the tip
internal loads must balance the applied tip wrench plus the tendon anchor
pull -sum tau_i t_i(l) (without the anchor wrench a straight rod with
straight tendon paths would satisfy the boundary conditions at any tension
and never bend).
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, model, se3
from .errors import IoFailure, NoConvergence, SingularSystem, ZeroTangent
from .geometry import stiffness_diagonals, tendon_paths

_BIG = 1e30


@dataclass(frozen=True)
class SolverConfig:
    grid_steps: int = 200          # RK4 steps over [0, length]
    newton_max_iter: int = 50
    residual_tol: float = 1e-8     # on both force [N] and moment [N m] norms
    fd_epsilon: float = 1e-7       # forward-difference step for the Jacobian
    step_shrink: float = 0.5       # damping: step scale multiplier
    min_step_scale: float = 1.0 / 64.0
    continuation_steps: int = 5    # tension continuation fallback

    def __post_init__(self):
        if self.grid_steps < 10:
            raise ValueError("grid_steps must be at least 10")
        if min(self.residual_tol, self.fd_epsilon) <= 0:
            raise ValueError("tolerances must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")


@dataclass
class RodSolution:
    """Sampled solution over the uniform s grid.

    residual_norm is max(|n(l) - target_f|, |m(l) - target_m|) where the
    targets include the tendon anchor wrench; converged means it is below
    the configured tolerance. degenerate flags v_z <= 0 somewhere (material
    frame reversal).
    """

    s: np.ndarray
    p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    u: np.ndarray
    converged: bool
    residual_norm: float
    iterations: int
    spec: object = None
    tensions: np.ndarray = field(default_factory=lambda: np.zeros(0))
    degenerate: bool = False

    @property
    def tip_position(self):
        return self.p[-1]

    @property
    def tip_quaternion(self):
        return self.q[-1]

    def state_at(self, index):
        return model.RodState(p=self.p[index].copy(), q=self.q[index].copy(),
                              v=self.v[index].copy(), u=self.u[index].copy())

    def position_at(self, s_query):
        """Linear interpolation of the centerline, s_query scalar or array."""
        s_query = np.atleast_1d(np.asarray(s_query, dtype=float))
        out = np.column_stack([
            np.interp(s_query, self.s, self.p[:, k]) for k in range(3)
        ])
        return out[0] if out.shape[0] == 1 else out

    def bending_angle(self):
        """Total bend: integral of |(u_x, u_y)| over s [rad]."""
        mag = np.hypot(self.u[:, 0], self.u[:, 1])
        return float(np.trapezoid(mag, self.s))


class _Prepared:
    """Geometry and loads sampled on the RK4 stage grid for one spec."""

    def __init__(self, spec, config, loads):
        self.spec = spec
        self.config = config
        self.loads = loads or model.ExternalLoads.none()
        n = config.grid_steps
        self.n_steps = n
        self.h = spec.length / n
        stages = np.linspace(0.0, spec.length, 2 * n + 1)
        self.s_nodes = stages[::2]
        npts = stages.size
        self.kse = np.empty((npts, 3))
        self.kbt = np.empty((npts, 3))
        self.dkse = np.empty((npts, 3))
        self.dkbt = np.empty((npts, 3))
        paths = tendon_paths(spec)
        t = len(paths)
        self.d = np.empty((npts, t, 3))
        self.dd = np.empty((npts, t, 3))
        self.ddd = np.empty((npts, t, 3))
        self.fe = np.empty((npts, 3))
        self.le = np.empty((npts, 3))
        for j, s in enumerate(stages):
            self.kse[j], self.kbt[j], self.dkse[j], self.dkbt[j] = \
                stiffness_diagonals(spec, s)
            for i, path in enumerate(paths):
                self.d[j, i] = path.offset(s)
                self.dd[j, i] = path.offset_rate(s)
                self.ddd[j, i] = path.offset_accel(s)
            self.fe[j], self.le[j] = self.loads.distributed_at(s)

    def integrate_batch(self, x0s, tau):
        """Integrate proximal strain guesses x0s (B,6); returns
        (trajs (B,n+1,13), statuses (B,), fail_steps (B,))."""
        b = x0s.shape[0]
        y0s = np.zeros((b, 13))
        y0s[:, 3] = 1.0
        y0s[:, 7:13] = x0s
        taus = np.broadcast_to(tau, (b, tau.size)).copy()
        trajs = np.empty((b, self.n_steps + 1, 13))
        statuses = np.empty(b, dtype=np.int64)
        fail_steps = np.empty(b, dtype=np.int64)
        _kernels.integrate_batch(y0s, taus, self.kse, self.kbt, self.dkse,
                                 self.dkbt, self.d, self.dd, self.ddd,
                                 self.fe, self.le, self.h, self.n_steps,
                                 trajs, statuses, fail_steps)
        return trajs, statuses, fail_steps

    def residual(self, traj, tau):
        """Tip residual (rf, rm) for one trajectory, or (None, None) if the
        terminal state is unusable."""
        y = traj[-1]
        if not np.all(np.isfinite(y)):
            return None, None
        rot = se3.quat_to_rotation(y[3:7])
        v = y[7:10]
        u = y[10:13]
        n_tip = rot @ (self.kse[-1] * (v - model.V_REF))
        m_tip = rot @ (self.kbt[-1] * u)
        f_anchor = np.zeros(3)
        l_anchor = np.zeros(3)
        for i in range(tau.size):
            if tau[i] == 0.0:
                continue
            pdot_b = np.cross(u, self.d[-1, i]) + self.dd[-1, i] + v
            nrm = np.linalg.norm(pdot_b)
            if nrm < 1e-9:
                return None, None
            t_i = rot @ (pdot_b / nrm)
            f_anchor -= tau[i] * t_i
            l_anchor -= np.cross(rot @ self.d[-1, i], tau[i] * t_i)
        rf = n_tip - self.loads.tip_force - f_anchor
        rm = m_tip - self.loads.tip_moment - l_anchor
        return rf, rm

    def residual_vector(self, traj, tau):
        rf, rm = self.residual(traj, tau)
        if rf is None:
            return None
        return np.concatenate([rf, rm])


def _residual_norm(r):
    if r is None:
        return _BIG
    return max(np.linalg.norm(r[:3]), np.linalg.norm(r[3:]))


def _solution_from_traj(prep, traj, tau, converged, residual_norm, iterations):
    return RodSolution(
        s=prep.s_nodes.copy(),
        p=traj[:, 0:3].copy(),
        q=traj[:, 3:7].copy(),
        v=traj[:, 7:10].copy(),
        u=traj[:, 10:13].copy(),
        converged=converged,
        residual_norm=residual_norm,
        iterations=iterations,
        spec=prep.spec,
        tensions=tau.copy(),
        degenerate=bool(np.any(traj[:, 9] <= 0.0)),
    )


def integrate(spec, v0, u0, tensions, loads=None, config=None):
    """Single RK4 pass from prescribed proximal strains.

    Returns a RodSolution candidate; its converged flag reflects whether the
    prescribed strains happen to satisfy the tip boundary conditions.
    """
    config = config or SolverConfig()
    tau = model.validate_tensions(spec, tensions)
    prep = _Prepared(spec, config, loads)
    x0 = np.concatenate([np.asarray(v0, dtype=float), np.asarray(u0, dtype=float)])
    trajs, statuses, fail_steps = prep.integrate_batch(x0[None, :], tau)
    if statuses[0] != _kernels.OK:
        s_fail = fail_steps[0] * prep.h
        if statuses[0] == _kernels.ZERO_TANGENT:
            raise ZeroTangent(f"tendon tangent vanished near s={s_fail:.6g}")
        if statuses[0] == _kernels.SINGULAR:
            raise SingularSystem(f"augmented system singular near s={s_fail:.6g}")
        raise NoConvergence(f"state became non-finite near s={s_fail:.6g}")
    r = prep.residual_vector(trajs[0], tau)
    rnorm = _residual_norm(r)
    return _solution_from_traj(prep, trajs[0], tau, rnorm < config.residual_tol,
                               rnorm, 0)


def _newton(prep, tau, x_init, iter_budget):
    """Damped Newton on the shooting residual.

    Returns (x, traj, residual_norm, iterations, converged).
    """
    config = prep.config
    tol = config.residual_tol
    eps = config.fd_epsilon
    x = x_init.copy()
    trajs, statuses, _ = prep.integrate_batch(x[None, :], tau)
    r = prep.residual_vector(trajs[0], tau) if statuses[0] == _kernels.OK else None
    rnorm = _residual_norm(r)
    traj = trajs[0]
    iterations = 0
    while iterations < iter_budget:
        if rnorm < tol:
            return x, traj, rnorm, iterations, True
        if r is None:
            return x, traj, rnorm, iterations, False
        iterations += 1
        # finite-difference Jacobian, one batched integration per stencil
        probes = np.repeat(x[None, :], 6, axis=0)
        for k in range(6):
            probes[k, k] += eps
        ptrajs, pstat, _ = prep.integrate_batch(probes, tau)
        jac = np.empty((6, 6))
        bad = False
        for k in range(6):
            if pstat[k] != _kernels.OK:
                bad = True
                break
            rk = prep.residual_vector(ptrajs[k], tau)
            if rk is None:
                bad = True
                break
            jac[:, k] = (rk - r) / eps
        if bad:
            return x, traj, rnorm, iterations, False
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return x, traj, rnorm, iterations, False
        if not np.all(np.isfinite(delta)):
            return x, traj, rnorm, iterations, False
        # damped line search on the residual norm
        scale = 1.0
        accepted = False
        while scale >= config.min_step_scale:
            x_new = x + scale * delta
            ntrajs, nstat, _ = prep.integrate_batch(x_new[None, :], tau)
            if nstat[0] == _kernels.OK:
                r_new = prep.residual_vector(ntrajs[0], tau)
                n_new = _residual_norm(r_new)
                if n_new < (1.0 - 1e-4 * scale) * rnorm:
                    x, r, rnorm, traj = x_new, r_new, n_new, ntrajs[0]
                    accepted = True
                    break
            scale *= config.step_shrink
        if not accepted:
            return x, traj, rnorm, iterations, False
    return x, traj, rnorm, iterations, rnorm < tol


def shoot(spec, tensions, loads=None, config=None, initial_guess=None):
    """Solve the tip boundary conditions for the proximal strains.

    initial_guess is a 6-vector (v0, u0); default is the reference strain.
    Falls back to tension continuation when the direct solve stalls. Raises
    NoConvergence (carrying the best candidate) if everything fails.
    """
    config = config or SolverConfig()
    tau = model.validate_tensions(spec, tensions)
    prep = _Prepared(spec, config, loads)
    return _shoot_prepared(prep, tau, initial_guess)


def _shoot_prepared(prep, tau, initial_guess=None):
    config = prep.config
    if initial_guess is None:
        x0 = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    else:
        x0 = np.asarray(initial_guess, dtype=float).copy()
    x, traj, rnorm, used, ok = _newton(prep, tau, x0, config.newton_max_iter)
    total_iters = used
    if not ok and np.any(tau > 0):
        # tension continuation: ramp tau up in uniform fractions, warm-starting
        x_c = x0.copy()
        for k in range(1, config.continuation_steps + 1):
            frac = k / config.continuation_steps
            budget = max(config.newton_max_iter // 2, 10)
            x_c, traj_c, rnorm_c, used_c, ok_c = _newton(
                prep, tau * frac, x_c, budget)
            total_iters += used_c
            if not ok_c:
                break
        else:
            x, traj, rnorm, ok = x_c, traj_c, rnorm_c, ok_c
    if not ok:
        best = _solution_from_traj(prep, traj, tau, False, rnorm, total_iters)
        raise NoConvergence(
            f"shooting stalled at residual {rnorm:.3e}", best=best)
    return _solution_from_traj(prep, traj, tau, True, rnorm, total_iters)


def solve_tension_sweep(spec, schedule, loads=None, config=None):
    """Solve a sequence of tension vectors, warm-starting along the way.

    schedule is (S, tendon_count). Failed samples are returned with
    converged=False (best candidate); the sweep continues.
    """
    config = config or SolverConfig()
    schedule = np.atleast_2d(np.asarray(schedule, dtype=float))
    prep = _Prepared(spec, config, loads)
    solutions = []
    guess = None
    for row in schedule:
        tau = model.validate_tensions(spec, row)
        try:
            sol = _shoot_prepared(prep, tau, guess)
        except NoConvergence as exc:
            sol = exc.best
        solutions.append(sol)
        if sol is not None and sol.converged:
            guess = np.concatenate([sol.v[0], sol.u[0]])
    return solutions


# ---------------------------------------------------------------------------
# solution CSV
# ---------------------------------------------------------------------------

SOLUTION_HEADER = ["s_m", "px", "py", "pz", "qw", "qx", "qy", "qz",
                   "vx", "vy", "vz", "ux", "uy", "uz"]


def solution_summary(sol):
    tip = sol.tip_position
    tq = sol.tip_quaternion
    return {
        "converged": str(bool(sol.converged)).lower(),
        "residual_norm": repr(float(sol.residual_norm)),
        "iterations": str(int(sol.iterations)),
        "tip_px": repr(float(tip[0])),
        "tip_py": repr(float(tip[1])),
        "tip_pz": repr(float(tip[2])),
        "tip_qw": repr(float(tq[0])),
        "tip_qx": repr(float(tq[1])),
        "tip_qy": repr(float(tq[2])),
        "tip_qz": repr(float(tq[3])),
        "bending_angle_rad": repr(float(sol.bending_angle())),
    }


def write_solution_csv(sol, path):
    """Solution samples as CSV; summary lines as leading '#' comments."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for key, value in solution_summary(sol).items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh)
            writer.writerow(SOLUTION_HEADER)
            for i in range(sol.s.size):
                writer.writerow([repr(float(x)) for x in (
                    sol.s[i], *sol.p[i], *sol.q[i], *sol.v[i], *sol.u[i])])
    except OSError as exc:
        raise IoFailure(f"cannot write solution csv: {exc}") from exc


def read_solution_csv(path):
    """Returns (arrays dict with s/p/q/v/u, summary dict)."""
    meta = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoFailure(f"cannot read solution csv: {exc}") from exc
    rows = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        rows.append(line)
    reader = csv.reader(io.StringIO("".join(rows)))
    header = next(reader)
    if header != SOLUTION_HEADER:
        raise IoFailure(f"unexpected solution csv header: {header}")
    data = np.array([[float(x) for x in row] for row in reader])
    return {
        "s": data[:, 0],
        "p": data[:, 1:4],
        "q": data[:, 4:8],
        "v": data[:, 8:11],
        "u": data[:, 11:14],
    }, meta
