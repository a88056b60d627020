"""Small SE(2) helpers shared by the simulator, odometry and evaluation."""

import numpy as np

SERIES_THRESHOLD = 1e-6


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if w.ndim == 0 else w


def rot(yaw):
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s], [s, c]])


def se2_exp_translation(dx, dy, dtheta):
    """Translation part of exp of the twist (dx, dy, dtheta).

    Vectorized; uses a series expansion when ``|dtheta|`` is tiny.
    """
    dx, dy, dtheta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (dx, dy, dtheta)))
    small = np.abs(dtheta) < SERIES_THRESHOLD
    th = np.where(small, 1.0, dtheta)
    a = np.where(small, 1.0 - dtheta**2 / 6.0, np.sin(th) / th)
    # 1 - cos written as 2 sin^2(th/2) to avoid cancellation just above the threshold
    b = np.where(small, dtheta / 2.0 - dtheta**3 / 24.0, 2.0 * np.sin(th / 2.0) ** 2 / th)
    return a * dx - b * dy, b * dx + a * dy


def compose(p, q):
    """Compose poses given as (x, y, yaw) triples: p * q."""
    c, s = np.cos(p[2]), np.sin(p[2])
    return (p[0] + c * q[0] - s * q[1], p[1] + s * q[0] + c * q[1], wrap_angle(p[2] + q[2]))


def between(p, q):
    """Relative pose p^-1 * q."""
    c, s = np.cos(p[2]), np.sin(p[2])
    dx, dy = q[0] - p[0], q[1] - p[1]
    return (c * dx + s * dy, -s * dx + c * dy, wrap_angle(q[2] - p[2]))


def inverse(p):
    c, s = np.cos(p[2]), np.sin(p[2])
    return (-(c * p[0] + s * p[1]), s * p[0] - c * p[1], wrap_angle(-p[2]))
