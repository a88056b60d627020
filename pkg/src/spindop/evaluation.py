"""KITTI-style translational drift over fixed-length subsequences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import between

DEFAULT_LENGTHS = tuple(range(100, 900, 100))


class EmptyReportError(ValueError):
    pass


@dataclass
class DriftReport:
    per_length: dict
    per_length_rotation: dict
    mean: float
    mean_rotation: float
    mode: str = ""
    sequences: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "translation_drift_pct": self.mean,
            "rotation_drift_deg_per_m": self.mean_rotation,
            "per_length_pct": {str(k): v for k, v in self.per_length.items()},
            "per_length_rotation_deg_per_m": {str(k): v for k, v in self.per_length_rotation.items()},
            "sequences": self.sequences,
        }


def _as_xyyaw(traj):
    return (np.asarray(traj.x, float), np.asarray(traj.y, float), np.asarray(traj.yaw, float),
            np.asarray(traj.t_us, np.int64))


def associate(est_t, gt_t, max_dt_us=None) -> np.ndarray:
    """Index of the nearest ground-truth timestamp for each estimate timestamp."""
    gt_t = np.asarray(gt_t)
    i = np.clip(np.searchsorted(gt_t, est_t), 1, len(gt_t) - 1)
    left, right = gt_t[i - 1], gt_t[i]
    idx = np.where(np.abs(est_t - left) <= np.abs(right - est_t), i - 1, i)
    if max_dt_us is not None and np.any(np.abs(gt_t[idx] - est_t) > max_dt_us):
        raise ValueError("estimate and ground truth are not time-aligned")
    return idx


def kitti_drift(estimated, groundtruth, lengths=DEFAULT_LENGTHS, mode: str = "",
                max_dt_us=None) -> DriftReport:
    """Mean translational (%) and rotational (deg/m) drift over subsequences.

    Subsequences start at every estimate sample. Each error is divided by the
    ground-truth distance actually covered by the subsequence, which is the
    first sample at or beyond the nominal length.
    """
    ex, ey, eyaw, et = _as_xyyaw(estimated)
    gx, gy, gyaw, gt = _as_xyyaw(groundtruth)
    idx = associate(et, gt, max_dt_us)
    gx, gy, gyaw = gx[idx], gy[idx], gyaw[idx]
    dist = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(gx), np.diff(gy)))])
    if len(dist) < 2 or dist[-1] < min(lengths):
        raise EmptyReportError(f"path length {dist[-1]:.1f} m is shorter than {min(lengths)} m")
    per_t, per_r = {}, {}
    for L in lengths:
        ends = np.searchsorted(dist, dist + L)
        starts = np.flatnonzero(ends < len(dist))
        if len(starts) == 0:
            continue
        terr, rerr = [], []
        for i in starts:
            j = ends[i]
            g = between((gx[i], gy[i], gyaw[i]), (gx[j], gy[j], gyaw[j]))
            e = between((ex[i], ey[i], eyaw[i]), (ex[j], ey[j], eyaw[j]))
            err = between(e, g)
            seg = dist[j] - dist[i]
            terr.append(np.hypot(err[0], err[1]) / seg)
            rerr.append(abs(err[2]) / seg)
        per_t[L] = 100.0 * float(np.mean(terr))
        per_r[L] = float(np.degrees(np.mean(rerr)))
    if not per_t:
        raise EmptyReportError("no subsequence reaches any requested length")
    return DriftReport(per_t, per_r, float(np.mean(list(per_t.values()))),
                       float(np.mean(list(per_r.values()))), mode)


def combine_reports(reports, mode: str = "", names=None) -> DriftReport:
    """Average per-length drifts over several sequences."""
    reports = list(reports)
    if not reports:
        raise EmptyReportError("no reports to combine")
    names = names or [str(i) for i in range(len(reports))]
    keys = sorted(set().union(*(r.per_length for r in reports)))
    per_t = {k: float(np.mean([r.per_length[k] for r in reports if k in r.per_length])) for k in keys}
    per_r = {k: float(np.mean([r.per_length_rotation[k] for r in reports if k in r.per_length_rotation]))
             for k in keys}
    seqs = {n: r.mean for n, r in zip(names, reports)}
    return DriftReport(per_t, per_r, float(np.mean(list(per_t.values()))),
                       float(np.mean(list(per_r.values()))), mode, seqs)
