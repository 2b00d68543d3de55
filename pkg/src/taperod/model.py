"""Cosserat rod statics for a tendon-driven tapered backbone.

State along arc length s: position p (world), orientation quaternion q
(body->world), linear strain v and angular strain u (body frame). The
undeformed reference is v0 = (0,0,1), u0 = 0 with zero rates.

Two right-hand sides are provided: `rhs_unactuated` for a rod under
distributed loads only, and `rhs_actuated` which folds the tendon loads into
the 6x6 augmented system (the tendon distributed force depends on vdot/udot,
so those unknowns move to the left-hand side).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels, se3
from .errors import SingularStiffness, SingularSystem, ZeroTangent
from .geometry import radius_at, stiffness_diagonals, tendon_paths

# reference strains of the straight, unstretched rod
V_REF = np.array([0.0, 0.0, 1.0])
U_REF = np.zeros(3)


@dataclass
class RodState:
    """ODE state at one arc length."""

    p: np.ndarray  # position [m], world frame
    q: np.ndarray  # unit quaternion (w, x, y, z)
    v: np.ndarray  # linear strain, body frame
    u: np.ndarray  # angular strain [1/m], body frame

    @classmethod
    def straight(cls):
        return cls(p=np.zeros(3), q=np.array([1.0, 0.0, 0.0, 0.0]),
                   v=V_REF.copy(), u=U_REF.copy())

    @classmethod
    def from_vector(cls, y):
        y = np.asarray(y, dtype=float)
        return cls(p=y[0:3].copy(), q=y[3:7].copy(),
                   v=y[7:10].copy(), u=y[10:13].copy())

    def as_vector(self):
        return np.concatenate([self.p, self.q, self.v, self.u])

    @property
    def rotation(self):
        return se3.quat_to_rotation(self.q)


@dataclass
class ExternalLoads:
    """Distributed and tip loads, all in the world frame.

    f_dist/l_dist map arc length to force/moment per unit length; None means
    zero. tip_force/tip_moment act at s=length.
    """

    f_dist: Optional[Callable] = None
    l_dist: Optional[Callable] = None
    tip_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tip_moment: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def tip(cls, force=(0.0, 0.0, 0.0), moment=(0.0, 0.0, 0.0)):
        return cls(tip_force=np.asarray(force, dtype=float),
                   tip_moment=np.asarray(moment, dtype=float))

    def distributed_at(self, s):
        fe = np.zeros(3) if self.f_dist is None else np.asarray(self.f_dist(s), dtype=float)
        le = np.zeros(3) if self.l_dist is None else np.asarray(self.l_dist(s), dtype=float)
        return fe, le


def gravity_loads(spec, density, g=(0.0, 0.0, -9.81)):
    """Self-weight as a distributed load: rho * A(s) * g. Off by default
    everywhere; the quasi-static validation had the robot hanging vertically
    and the reference model carries no weight term."""
    gvec = np.asarray(g, dtype=float)

    def f_dist(s):
        r = radius_at(spec, s)
        return density * np.pi * r * r * gvec

    return ExternalLoads(f_dist=f_dist)


def validate_tensions(spec, tensions):
    tau = np.asarray(tensions, dtype=float)
    if tau.shape != (spec.tendon_count,):
        raise ValueError(
            f"expected {spec.tendon_count} tensions, got shape {tau.shape}")
    if np.any(tau < 0) or not np.all(np.isfinite(tau)):
        raise ValueError("tensions must be finite and non-negative")
    return tau


def _tendon_geometry_at(spec, s):
    """Offsets d, d', d'' for all tendons at s, stacked (T,3)."""
    paths = tendon_paths(spec)
    d = np.stack([t.offset(s) for t in paths])
    dd = np.stack([t.offset_rate(s) for t in paths])
    ddd = np.stack([t.offset_accel(s) for t in paths])
    return d, dd, ddd


def rhs_unactuated(spec, state, s, loads=None):
    """State derivative without tendons (distributed loads only).

    Returns (pdot, qdot, vdot, udot).
    """
    loads = loads or ExternalLoads.none()
    kse, kbt, dkse, dkbt = stiffness_diagonals(spec, s)
    if np.any(kse <= 0) or np.any(kbt <= 0):
        raise SingularStiffness(f"non-positive stiffness diagonal at s={s}")
    fe, le = loads.distributed_at(s)
    rot = se3.quat_to_rotation(state.q)
    v, u = state.v, state.u
    sv = v - V_REF
    pdot = rot @ v
    qdot = se3.quat_derivative(state.q, u)
    vdot = -(np.cross(u, kse * sv) + dkse * sv + rot.T @ fe) / kse
    udot = -(np.cross(u, kbt * u) + dkbt * u + np.cross(v, kse * sv)
             + rot.T @ le) / kbt
    return pdot, qdot, vdot, udot


def tendon_kinematics(spec, state, s, tendon_index):
    """Body-frame tendon tangent and the state-independent part of its rate.

    Returns (pdot_b, pddot_partial) where
      pdot_b       = hat(u) d + d' + v
      pddot_partial = hat(u) pdot_b + hat(u) d' + d''
    The full second derivative adds vdot - hat(d) udot, which the augmented
    system absorbs into its left-hand side.
    """
    path = tendon_paths(spec)[tendon_index]
    d = path.offset(s)
    dd = path.offset_rate(s)
    ddd = path.offset_accel(s)
    pdot_b = np.cross(state.u, d) + dd + state.v
    if np.linalg.norm(pdot_b) < 1e-9:
        raise ZeroTangent(f"tendon {tendon_index} tangent vanished at s={s}")
    pddot_partial = np.cross(state.u, pdot_b) + np.cross(state.u, dd) + ddd
    return pdot_b, pddot_partial


@dataclass
class ActuationTerms:
    """Summed tendon coupling blocks and load terms of the augmented system."""

    A: np.ndarray
    B: np.ndarray
    G: np.ndarray
    H: np.ndarray
    a: np.ndarray
    b: np.ndarray


def actuation_matrices(spec, state, s, tensions):
    """Assemble A, B, G, H (3x3) and a, b (3,) summed over tendons."""
    tau = validate_tensions(spec, tensions)
    terms = ActuationTerms(A=np.zeros((3, 3)), B=np.zeros((3, 3)),
                           G=np.zeros((3, 3)), H=np.zeros((3, 3)),
                           a=np.zeros(3), b=np.zeros(3))
    paths = tendon_paths(spec)
    for i, path in enumerate(paths):
        if tau[i] == 0.0:
            continue
        pdot_b, partial = tendon_kinematics(spec, state, s, i)
        nrm = np.linalg.norm(pdot_b)
        a_i = -tau[i] * (se3.hat(pdot_b) @ se3.hat(pdot_b)) / nrm ** 3
        d_hat = se3.hat(path.offset(s))
        b_i = d_hat @ a_i
        terms.A += a_i
        terms.B += b_i
        terms.G += -a_i @ d_hat
        terms.H += -b_i @ d_hat
        a_vec = a_i @ partial
        terms.a += a_vec
        terms.b += d_hat @ a_vec
    return terms


def rhs_actuated(spec, state, s, tensions, loads=None):
    """State derivative with tendon actuation folded into the 6x6 system.

    Returns (pdot, qdot, vdot, udot). With all tensions zero this reduces to
    rhs_unactuated.
    """
    tau = validate_tensions(spec, tensions)
    loads = loads or ExternalLoads.none()
    kse, kbt, dkse, dkbt = stiffness_diagonals(spec, s)
    if np.any(kse <= 0) or np.any(kbt <= 0):
        raise SingularStiffness(f"non-positive stiffness diagonal at s={s}")
    d, dd, ddd = _tendon_geometry_at(spec, s)
    fe, le = loads.distributed_at(s)
    out = np.empty(13)
    status = _kernels.rhs(state.as_vector(), tau, kse, kbt, dkse, dkbt,
                          d, dd, ddd, fe, le, out)
    if status == _kernels.ZERO_TANGENT:
        raise ZeroTangent(f"tendon tangent vanished at s={s}")
    if status == _kernels.SINGULAR:
        raise SingularSystem(f"augmented system singular at s={s}")
    return out[0:3], out[3:7], out[7:10], out[10:13]


def internal_loads(spec, state, s):
    """Internal force n and moment m in the world frame (constitutive law)."""
    kse, kbt, _, _ = stiffness_diagonals(spec, s)
    rot = se3.quat_to_rotation(state.q)
    n = rot @ (kse * (state.v - V_REF))
    m = rot @ (kbt * (state.u - U_REF))
    return n, m


def tendon_tip_loads(spec, state, tensions):
    """Point force/moment the tendon anchors apply to the distal disc.

    Each tendon terminates at the tip and pulls back along its own tangent:
    F = -sum tau_i t_i(l), with moment arm R d_i about the centerline.
    World frame, evaluated at the tip state.
    """
    tau = validate_tensions(spec, tensions)
    rot = se3.quat_to_rotation(state.q)
    force = np.zeros(3)
    moment = np.zeros(3)
    for i, path in enumerate(tendon_paths(spec)):
        if tau[i] == 0.0:
            continue
        pdot_b, _ = tendon_kinematics(spec, state, spec.length, i)
        t_i = rot @ (pdot_b / np.linalg.norm(pdot_b))
        force -= tau[i] * t_i
        moment -= np.cross(rot @ path.offset(spec.length), tau[i] * t_i)
    return force, moment


def distributed_actuation(spec, state, s, tensions, vdot, udot):
    """Distributed tendon force/couple per unit length, world frame.

    Reconstructs f_act = R (a + A vdot + G udot) and
    l_act = R (b + B vdot + H udot) from the solved strain rates. Used to
    check the integrated force balance of converged solutions.
    """
    terms = actuation_matrices(spec, state, s, tensions)
    rot = se3.quat_to_rotation(state.q)
    f_act = rot @ (terms.a + terms.A @ vdot + terms.G @ udot)
    l_act = rot @ (terms.b + terms.B @ vdot + terms.H @ udot)
    return f_act, l_act
