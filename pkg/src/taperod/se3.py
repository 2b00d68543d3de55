"""Small rotation/quaternion toolbox for rod kinematics.

Conventions used everywhere in this package:
  - vectors are plain numpy arrays, shape (3,)
  - unit quaternions are numpy arrays (w, x, y, z), Hamilton product,
    rotating body frame -> world frame
  - angular rate u is expressed in the body frame, so Rdot = R @ hat(u)
"""

import numpy as np

from .errors import NotSkewSymmetric


def hat(a):
    """Skew-symmetric matrix of a 3-vector: hat(a) @ b == cross(a, b)."""
    return np.array([
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ])


def vee(m, tol=1e-9):
    """Inverse of hat(). Rejects matrices that are not skew within tol."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or np.max(np.abs(m + m.T)) > tol:
        raise NotSkewSymmetric("vee() expects a 3x3 skew-symmetric matrix")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    return q / n


def quat_multiply(q1, q2):
    """Hamilton product q1 * q2, both (w, x, y, z)."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_rotation(q):
    """Rotation matrix of a quaternion. Normalizes defensively."""
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_derivative(q, u):
    """Quaternion rate for body angular rate u: 0.5 * q * (0, u)."""
    w, x, y, z = q
    ux, uy, uz = u
    return 0.5 * np.array([
        -x * ux - y * uy - z * uz,
        w * ux + y * uz - z * uy,
        w * uy - x * uz + z * ux,
        w * uz + x * uy - y * ux,
    ])


def rotation_from_rotvec(w):
    """Rodrigues formula: rotation by angle |w| about axis w/|w|."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        return np.eye(3) + hat(w)
    k = hat(w / theta)
    return np.eye(3) + np.sin(theta) * k + (1.0 - np.cos(theta)) * (k @ k)
