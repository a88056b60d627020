"""Flat-wall scene and the per-pair zig-zag measurement shared by several test files."""

import numpy as np

from spindop.radar_core import RadarConfig
from spindop.scan_sim import SceneSpec, TrajectorySpec, Wall, simulate_scan
from spindop.signal_dsp import cross_correlate_lag, filter_azimuths

WALL_X = 40.0
HALF_WINDOW = 100


def wall_scan(v, seed=0, config=RadarConfig(), **scene_kw):
    scene = SceneSpec(np.zeros((0, 3)), [Wall((WALL_X, -80), (WALL_X, 80), 1.0)], **scene_kw)
    traj = TrajectorySpec(knots=[(0, v[0], v[1], 0), (10, v[0], v[1], 0)])
    return simulate_scan(scene, traj, 0, config, seed, 0)


def zigzag_errors(scan, gt, v):
    """Per-pair |measured separation| - 2 beta |u| in bins, for wall-visible pairs.

    The separation is how far azimuth k+1's wall return sits from its own
    true range, minus the same for azimuth k. Each azimuth is windowed around
    its true wall range so only the wall takes part in the correlation.
    """
    cfg = scan.config
    res, W = cfg.bin_resolution, HALF_WINDOW
    F = filter_azimuths(scan.intensities)
    c = np.cos(scan.angles)
    with np.errstate(divide="ignore"):
        rt = np.where(c > 0.05, (WALL_X - gt.x) / c, np.inf)
    visible = (c > 0.05) & (rt / res + W + 1 < cfg.num_bins)
    errs = []
    for k in range(len(scan) - 1):
        if not (visible[k] and visible[k + 1]):
            continue
        b0, b1 = int(round(rt[k] / res)), int(round(rt[k + 1] / res))
        est = cross_correlate_lag(F[k, b0 - W:b0 + W], F[k + 1, b1 - W:b1 + W], W - 10)
        if not est.valid:
            errs.append(np.inf)
            continue
        sep = (est.lag + b1 - b0) * res - (rt[k + 1] - rt[k])
        theta = 0.5 * (scan.angles[k] + scan.angles[k + 1])
        u = -(v[0] * np.cos(theta) + v[1] * np.sin(theta))
        errs.append(abs(abs(sep) - 2 * cfg.beta * abs(u)) / res)
    return np.array(errs)
