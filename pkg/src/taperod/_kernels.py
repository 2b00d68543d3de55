"""Jitted inner loops for the rod ODE.

Everything here works on raw float64 arrays; the public modules own argument
validation, unit handling and error types. Geometry (stiffness diagonals,
tendon offsets, distributed loads) is pre-sampled on the RK4 stage grid:
2*n_steps+1 points at s = j*h/2, so node j uses index 2j and the midpoint of
step j uses index 2j+1.

State layout (13,): [p(3), q(4) w-first, v(3), u(3)].

Status codes returned by the kernels:
  0 ok, 1 zero tendon tangent, 2 singular 6x6 system, 3 non-finite state.
"""

import numpy as np
from numba import njit

OK = 0
ZERO_TANGENT = 1
SINGULAR = 2
NONFINITE = 3

# condition estimate above which the 6x6 solve is treated as singular
COND_LIMIT = 1e12


@njit(cache=True)
def _solve6(m, rhs, x):
    """Solve m @ x = rhs (6x6) by partially pivoted elimination.

    Returns a cheap lower-bound estimate of the 1-norm condition number
    (via one extra backsolve with the all-ones vector), or -1.0 when a
    pivot vanishes exactly.
    """
    a = m.copy()
    r = rhs.copy()
    z = np.ones(6)
    norm_m = 0.0
    for j in range(6):
        col = 0.0
        for i in range(6):
            col += abs(a[i, j])
        if col > norm_m:
            norm_m = col
    for k in range(6):
        piv = k
        mx = abs(a[k, k])
        for i in range(k + 1, 6):
            v = abs(a[i, k])
            if v > mx:
                mx = v
                piv = i
        if mx == 0.0:
            return -1.0
        if piv != k:
            for j in range(6):
                tmp = a[k, j]
                a[k, j] = a[piv, j]
                a[piv, j] = tmp
            tmp = r[k]
            r[k] = r[piv]
            r[piv] = tmp
            tmp = z[k]
            z[k] = z[piv]
            z[piv] = tmp
        akk = a[k, k]
        for i in range(k + 1, 6):
            f = a[i, k] / akk
            if f != 0.0:
                a[i, k] = 0.0
                for j in range(k + 1, 6):
                    a[i, j] -= f * a[k, j]
                r[i] -= f * r[k]
                z[i] -= f * z[k]
    for i in range(5, -1, -1):
        s = r[i]
        t = z[i]
        for j in range(i + 1, 6):
            s -= a[i, j] * x[j]
            t -= a[i, j] * z[j]
        x[i] = s / a[i, i]
        z[i] = t / a[i, i]
    norm_z = 0.0
    for i in range(6):
        norm_z += abs(z[i])
    return norm_m * norm_z / 6.0


@njit(cache=True)
def rhs(y, tau, kse, kbt, dkse, dkbt, doff, ddoff, dddoff, fe, le, out):
    """State derivative at one arc-length station.

    y       (13,) state
    tau     (T,) tendon tensions [N]
    kse..dkbt  (3,) stiffness diagonals and their s-derivatives
    doff, ddoff, dddoff  (T,3) tendon offset d_i, d_i', d_i'' in body frame
    fe, le  (3,) distributed force/moment per unit length, world frame
    out     (13,) receives [pdot, qdot, vdot, udot]
    """
    qw = y[3]
    qx = y[4]
    qy = y[5]
    qz = y[6]
    # R from the normalized quaternion (scale-free); qdot keeps the raw q so
    # the quaternion ODE stays linear and RK4 keeps its order.
    qn = np.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
    w = qw / qn
    x = qx / qn
    yy = qy / qn
    z = qz / qn
    r00 = 1.0 - 2.0 * (yy * yy + z * z)
    r01 = 2.0 * (x * yy - w * z)
    r02 = 2.0 * (x * z + w * yy)
    r10 = 2.0 * (x * yy + w * z)
    r11 = 1.0 - 2.0 * (x * x + z * z)
    r12 = 2.0 * (yy * z - w * x)
    r20 = 2.0 * (x * z - w * yy)
    r21 = 2.0 * (yy * z + w * x)
    r22 = 1.0 - 2.0 * (x * x + yy * yy)

    vx = y[7]
    vy = y[8]
    vz = y[9]
    ux = y[10]
    uy = y[11]
    uz = y[12]

    # strain deviations from the reference (v0 = e3, u0 = 0)
    sx = vx
    sy = vy
    sz = vz - 1.0

    # K_se (v - v0) and K_bt u, diagonal stiffness
    nsx = kse[0] * sx
    nsy = kse[1] * sy
    nsz = kse[2] * sz
    mbx = kbt[0] * ux
    mby = kbt[1] * uy
    mbz = kbt[2] * uz

    # rhs blocks before actuation: d-row (force) and c-row (moment)
    rd = np.empty(3)
    rc = np.empty(3)
    # u x (K_se s) + Kdot_se s + R^T fe
    rd[0] = -((uy * nsz - uz * nsy) + dkse[0] * sx + r00 * fe[0] + r10 * fe[1] + r20 * fe[2])
    rd[1] = -((uz * nsx - ux * nsz) + dkse[1] * sy + r01 * fe[0] + r11 * fe[1] + r21 * fe[2])
    rd[2] = -((ux * nsy - uy * nsx) + dkse[2] * sz + r02 * fe[0] + r12 * fe[1] + r22 * fe[2])
    # u x (K_bt u) + Kdot_bt u + v x (K_se s) + R^T le
    rc[0] = -((uy * mbz - uz * mby) + dkbt[0] * ux + (vy * nsz - vz * nsy)
              + r00 * le[0] + r10 * le[1] + r20 * le[2])
    rc[1] = -((uz * mbx - ux * mbz) + dkbt[1] * uy + (vz * nsx - vx * nsz)
              + r01 * le[0] + r11 * le[1] + r21 * le[2])
    rc[2] = -((ux * mby - uy * mbx) + dkbt[2] * uz + (vx * nsy - vy * nsx)
              + r02 * le[0] + r12 * le[1] + r22 * le[2])

    m6 = np.zeros((6, 6))
    m6[0, 0] = kse[0]
    m6[1, 1] = kse[1]
    m6[2, 2] = kse[2]
    m6[3, 3] = kbt[0]
    m6[4, 4] = kbt[1]
    m6[5, 5] = kbt[2]

    for t in range(tau.shape[0]):
        if tau[t] == 0.0:
            continue
        dx = doff[t, 0]
        dy = doff[t, 1]
        dz = doff[t, 2]
        ddx = ddoff[t, 0]
        ddy = ddoff[t, 1]
        ddz = ddoff[t, 2]
        # tendon tangent in the body frame: u x d + d' + v
        px = (uy * dz - uz * dy) + ddx + vx
        py = (uz * dx - ux * dz) + ddy + vy
        pz = (ux * dy - uy * dx) + ddz + vz
        nrm2 = px * px + py * py + pz * pz
        nrm = np.sqrt(nrm2)
        if nrm < 1e-9:
            return ZERO_TANGENT
        c = tau[t] / (nrm2 * nrm)
        # A_t = -tau hat(p)^2 / |p|^3 = c (|p|^2 I - p p^T), symmetric
        a00 = c * (nrm2 - px * px)
        a01 = c * (-px * py)
        a02 = c * (-px * pz)
        a11 = c * (nrm2 - py * py)
        a12 = c * (-py * pz)
        a22 = c * (nrm2 - pz * pz)

        m6[0, 0] += a00
        m6[0, 1] += a01
        m6[0, 2] += a02
        m6[1, 0] += a01
        m6[1, 1] += a11
        m6[1, 2] += a12
        m6[2, 0] += a02
        m6[2, 1] += a12
        m6[2, 2] += a22

        # B_t = hat(d) A_t
        b00 = dy * a02 - dz * a01
        b01 = dy * a12 - dz * a11
        b02 = dy * a22 - dz * a12
        b10 = dz * a00 - dx * a02
        b11 = dz * a01 - dx * a12
        b12 = dz * a02 - dx * a22
        b20 = dx * a01 - dy * a00
        b21 = dx * a11 - dy * a01
        b22 = dx * a12 - dy * a02
        m6[3, 0] += b00
        m6[3, 1] += b01
        m6[3, 2] += b02
        m6[4, 0] += b10
        m6[4, 1] += b11
        m6[4, 2] += b12
        m6[5, 0] += b20
        m6[5, 1] += b21
        m6[5, 2] += b22

        # G_t = -A_t hat(d): (G)_{jk} = -(A hat(d))_{jk} = (A_t @ hat(d))
        # hat(d) columns: col0=(0,dz,-dy), col1=(-dz,0,dx), col2=(dy,-dx,0)
        g00 = -(a01 * dz - a02 * dy)
        g01 = -(-a00 * dz + a02 * dx)
        g02 = -(a00 * dy - a01 * dx)
        g10 = -(a11 * dz - a12 * dy)
        g11 = -(-a01 * dz + a12 * dx)
        g12 = -(a01 * dy - a11 * dx)
        g20 = -(a12 * dz - a22 * dy)
        g21 = -(-a02 * dz + a22 * dx)
        g22 = -(a02 * dy - a12 * dx)
        m6[0, 3] += g00
        m6[0, 4] += g01
        m6[0, 5] += g02
        m6[1, 3] += g10
        m6[1, 4] += g11
        m6[1, 5] += g12
        m6[2, 3] += g20
        m6[2, 4] += g21
        m6[2, 5] += g22

        # H_t = -B_t hat(d) = hat(d) G_t
        m6[3, 3] += dy * g20 - dz * g10
        m6[3, 4] += dy * g21 - dz * g11
        m6[3, 5] += dy * g22 - dz * g12
        m6[4, 3] += dz * g00 - dx * g20
        m6[4, 4] += dz * g01 - dx * g21
        m6[4, 5] += dz * g02 - dx * g22
        m6[5, 3] += dx * g10 - dy * g00
        m6[5, 4] += dx * g11 - dy * g01
        m6[5, 5] += dx * g12 - dy * g02

        # a_t = A_t (u x (p + d') + d''); b_t = d x a_t
        wx = px + ddx
        wy = py + ddy
        wz = pz + ddz
        ex = (uy * wz - uz * wy) + dddoff[t, 0]
        ey = (uz * wx - ux * wz) + dddoff[t, 1]
        ez = (ux * wy - uy * wx) + dddoff[t, 2]
        ax = a00 * ex + a01 * ey + a02 * ez
        ay = a01 * ex + a11 * ey + a12 * ez
        az = a02 * ex + a12 * ey + a22 * ez
        rd[0] -= ax
        rd[1] -= ay
        rd[2] -= az
        rc[0] -= dy * az - dz * ay
        rc[1] -= dz * ax - dx * az
        rc[2] -= dx * ay - dy * ax

    rhs6 = np.empty(6)
    rhs6[0] = rd[0]
    rhs6[1] = rd[1]
    rhs6[2] = rd[2]
    rhs6[3] = rc[0]
    rhs6[4] = rc[1]
    rhs6[5] = rc[2]
    x6 = np.empty(6)
    cond = _solve6(m6, rhs6, x6)
    if cond < 0.0 or cond > COND_LIMIT:
        return SINGULAR

    # pdot = R v
    out[0] = r00 * vx + r01 * vy + r02 * vz
    out[1] = r10 * vx + r11 * vy + r12 * vz
    out[2] = r20 * vx + r21 * vy + r22 * vz
    # qdot = 0.5 q (0, u), raw q
    out[3] = 0.5 * (-qx * ux - qy * uy - qz * uz)
    out[4] = 0.5 * (qw * ux + qy * uz - qz * uy)
    out[5] = 0.5 * (qw * uy - qx * uz + qz * ux)
    out[6] = 0.5 * (qw * uz + qx * uy - qy * ux)
    out[7] = x6[0]
    out[8] = x6[1]
    out[9] = x6[2]
    out[10] = x6[3]
    out[11] = x6[4]
    out[12] = x6[5]
    return OK


@njit(cache=True)
def integrate(y0, tau, kse_g, kbt_g, dkse_g, dkbt_g, d_g, dd_g, ddd_g,
              fe_g, le_g, h, n_steps, traj):
    """Fixed-step RK4 from s=0 to s=n_steps*h.

    Grid arrays carry 2*n_steps+1 stage samples. traj is (n_steps+1, 13);
    traj[0] is y0 with the quaternion normalized, and the quaternion is
    renormalized after every step. Returns (status, step_index); on failure
    step_index is the step where it occurred.
    """
    y = y0.copy()
    qn = np.sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5] + y[6] * y[6])
    for i in range(4):
        y[3 + i] /= qn
    for i in range(13):
        traj[0, i] = y[i]
    k1 = np.empty(13)
    k2 = np.empty(13)
    k3 = np.empty(13)
    k4 = np.empty(13)
    ytmp = np.empty(13)
    for step in range(n_steps):
        i0 = 2 * step
        im = 2 * step + 1
        i1 = 2 * step + 2
        st = rhs(y, tau, kse_g[i0], kbt_g[i0], dkse_g[i0], dkbt_g[i0],
                 d_g[i0], dd_g[i0], ddd_g[i0], fe_g[i0], le_g[i0], k1)
        if st != OK:
            return st, step
        for i in range(13):
            ytmp[i] = y[i] + 0.5 * h * k1[i]
        st = rhs(ytmp, tau, kse_g[im], kbt_g[im], dkse_g[im], dkbt_g[im],
                 d_g[im], dd_g[im], ddd_g[im], fe_g[im], le_g[im], k2)
        if st != OK:
            return st, step
        for i in range(13):
            ytmp[i] = y[i] + 0.5 * h * k2[i]
        st = rhs(ytmp, tau, kse_g[im], kbt_g[im], dkse_g[im], dkbt_g[im],
                 d_g[im], dd_g[im], ddd_g[im], fe_g[im], le_g[im], k3)
        if st != OK:
            return st, step
        for i in range(13):
            ytmp[i] = y[i] + h * k3[i]
        st = rhs(ytmp, tau, kse_g[i1], kbt_g[i1], dkse_g[i1], dkbt_g[i1],
                 d_g[i1], dd_g[i1], ddd_g[i1], fe_g[i1], le_g[i1], k4)
        if st != OK:
            return st, step
        for i in range(13):
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        qn = np.sqrt(y[3] * y[3] + y[4] * y[4] + y[5] * y[5] + y[6] * y[6])
        if not np.isfinite(qn) or qn == 0.0:
            return NONFINITE, step
        for i in range(4):
            y[3 + i] /= qn
        ok = True
        for i in range(13):
            if not np.isfinite(y[i]):
                ok = False
        if not ok:
            return NONFINITE, step
        for i in range(13):
            traj[step + 1, i] = y[i]
    return OK, n_steps


@njit(cache=True)
def integrate_batch(y0s, taus, kse_g, kbt_g, dkse_g, dkbt_g, d_g, dd_g, ddd_g,
                    fe_g, le_g, h, n_steps, trajs, statuses, fail_steps):
    """Integrate a batch of initial states over the same geometry grid.

    y0s (B,13), taus (B,T), trajs (B, n_steps+1, 13). Used by the shooting
    Jacobian so a whole finite-difference stencil runs in one jitted call.
    """
    for b in range(y0s.shape[0]):
        st, stp = integrate(y0s[b], taus[b], kse_g, kbt_g, dkse_g, dkbt_g,
                            d_g, dd_g, ddd_g, fe_g, le_g, h, n_steps, trajs[b])
        statuses[b] = st
        fail_steps[b] = stp
