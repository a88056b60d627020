"""Frame-to-frame SE(2) odometry: ICP variants, Doppler velocity fusion and gyro dead reckoning."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .ego_estimator import EstimatorParams, VelocityPseudoMeasurement, estimate_scan_velocity
from .geometry import compose, rot, se2_exp_translation, wrap_angle
from .radar_core import RadarScan, radial_projection
from .signal_dsp import FilterParams, filter_azimuths

log = logging.getLogger(__name__)

MODES = ("icp", "icp_doppler_corrected", "doppler_icp_fused", "doppler_gyro")
MODE_ALIASES = {
    "icp": "icp",
    "icp-dc": "icp_doppler_corrected",
    "doppler-icp": "doppler_icp_fused",
    "doppler-gyro": "doppler_gyro",
}
CLI_NAMES = {v: k for k, v in MODE_ALIASES.items()}


def canonical_mode(mode: str) -> str:
    if mode in MODES:
        return mode
    try:
        return MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown odometry mode {mode!r}") from None


class RegistrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    timestamp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def as_tuple(self):
        return (self.x, self.y, self.yaw)

    def compose(self, delta: "Pose2", timestamp: int | None = None) -> "Pose2":
        x, y, yaw = compose(self.as_tuple(), delta.as_tuple())
        return Pose2(float(x), float(y), float(yaw),
                     self.timestamp if timestamp is None else int(timestamp))


@dataclass(frozen=True)
class BodyVelocity:
    vx: float
    vy: float
    omega: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.vx, self.vy, self.omega)):
            raise ValueError("body velocity must be finite")


@dataclass(frozen=True)
class GyroReading:
    omega: float
    timestamp: int
    bias: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega) and math.isfinite(self.bias)):
            raise ValueError("gyro reading must be finite")

    @property
    def corrected(self) -> float:
        return self.omega - self.bias


@dataclass
class PointCloud2:
    """Polar points in the sensor frame, one row per detection."""

    range: np.ndarray
    angle: np.ndarray
    intensity: np.ndarray
    azimuth_index: np.ndarray
    chirp: np.ndarray
    timestamp: np.ndarray
    dropped: int = 0

    def __len__(self):
        return len(self.range)

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.range * np.cos(self.angle), self.range * np.sin(self.angle)])

    def subset(self, mask) -> "PointCloud2":
        return PointCloud2(self.range[mask], self.angle[mask], self.intensity[mask],
                           self.azimuth_index[mask], self.chirp[mask], self.timestamp[mask],
                           self.dropped)

    @classmethod
    def from_xy(cls, xy, chirp=None) -> "PointCloud2":
        xy = np.asarray(xy, dtype=float)
        n = len(xy)
        return cls(np.hypot(xy[:, 0], xy[:, 1]), np.arctan2(xy[:, 1], xy[:, 0]), np.ones(n),
                   np.arange(n), np.ones(n, np.int8) if chirp is None else np.asarray(chirp, np.int8),
                   np.zeros(n, np.int64))


def extract_points(scan: RadarScan, k_strongest: int = 3, min_intensity: float = 0.0,
                   min_snr: float = 4.0, filter_params: FilterParams = FilterParams(),
                   filtered: np.ndarray | None = None) -> PointCloud2:
    """The ``k_strongest`` local maxima of each filtered azimuth.

    A peak must exceed ``min_intensity`` and ``min_snr`` times a robust noise
    scale of its row. Ranges get parabolic sub-bin refinement.
    """
    if k_strongest < 1:
        raise ValueError("k_strongest must be >= 1")
    F = filter_azimuths(scan.intensities, filter_params) if filtered is None else filtered
    inner = F[:, 1:-1]
    # one-sided scale: returns are positive, so the negative lobe is mostly noise
    neg = np.minimum(F, 0.0)
    noise = np.sqrt(np.einsum("ij,ij->i", neg, neg) / np.maximum(np.count_nonzero(neg, axis=1), 1))
    thr = np.maximum(min_intensity, min_snr * noise)[:, None]
    rows, cols = np.nonzero(inner > thr)
    c = cols + 1
    vals = F[rows, c]
    peak = (vals > F[rows, c - 1]) & (vals >= F[rows, c + 1])
    rows, cols, vals = rows[peak], cols[peak], vals[peak]
    # rank candidates within each row by strength, keep the first k
    order = np.lexsort((-vals, rows))
    rows, cols = rows[order], cols[order]
    first = np.searchsorted(rows, rows, side="left")
    rank = np.arange(len(rows)) - first
    keep = rank < k_strongest
    rows, cols = rows[keep], cols[keep] + 1
    y0, y1, y2 = F[rows, cols - 1], F[rows, cols], F[rows, cols + 1]
    denom = y0 - 2 * y1 + y2
    delta = np.where(denom < 0, 0.5 * (y0 - y2) / np.where(denom < 0, denom, -1.0), 0.0)
    res = scan.config.bin_resolution
    r = (cols + delta) * res
    order = np.lexsort((r, rows))
    rows, r, y1 = rows[order], r[order], y1[order]
    return PointCloud2(r, scan.angles[rows].astype(float), y1, rows.astype(np.int64),
                       scan.chirps[rows].astype(np.int8), scan.timestamps[rows].astype(np.int64))


def doppler_correct_points(cloud: PointCloud2, v, beta: float) -> PointCloud2:
    """Move every point back to its Doppler-free range.

    Points whose corrected range would be negative are dropped and counted
    in ``dropped``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    u = radial_projection(v, cloud.angle)
    r = cloud.range - cloud.chirp.astype(float) * beta * u
    ok = r >= 0
    out = replace(cloud, range=r)
    out = out.subset(ok) if not ok.all() else out
    out.dropped = cloud.dropped + int((~ok).sum())
    return out


def deskew_points(cloud: PointCloud2, velocity, t_ref_us: int) -> PointCloud2:
    """Express every point in the sensor frame at ``t_ref_us``.

    Assumes the body twist ``velocity`` = (vx, vy, omega) is constant over
    the scan; each point is moved by the sensor motion between its own
    azimuth timestamp and the reference time.
    """
    vx, vy, om = (float(a) for a in velocity)
    dt = (cloud.timestamp - int(t_ref_us)) * 1e-6
    tx, ty = se2_exp_translation(vx * dt, vy * dt, om * dt)
    th = om * dt
    xy = cloud.xy
    c, s = np.cos(th), np.sin(th)
    x = c * xy[:, 0] - s * xy[:, 1] + tx
    y = s * xy[:, 0] + c * xy[:, 1] + ty
    return replace(cloud, range=np.hypot(x, y), angle=np.arctan2(y, x))


def integrate_pose(pose: Pose2, v, omega: float, dt: float) -> Pose2:
    """Compose the exact SE(2) exponential of a constant body twist onto ``pose``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    dx, dy = se2_exp_translation(v[0] * dt, v[1] * dt, omega * dt)
    return pose.compose(Pose2(float(dx), float(dy), omega * dt),
                        pose.timestamp + int(round(dt * 1e6)))


@dataclass(frozen=True)
class IcpParams:
    max_iterations: int = 50
    tol_translation: float = 1e-4
    tol_rotation: float = 1e-5
    max_correspondence: float = 2.0
    cauchy_scale: float = 1.0
    point_sigma: float = 0.2
    min_correspondences: int = 10


@dataclass
class IcpResult:
    delta: Pose2
    cost: float
    iterations: int
    correspondences: int


@dataclass(frozen=True)
class VelocityPrior:
    """Ties the registration translation to a body velocity over ``dt``."""

    v: np.ndarray
    covariance: np.ndarray
    dt: float
    weight: float = 1.0

    def residual(self, x):
        m = rot(x[2] / 2) @ self.v * self.dt
        dm = rot(x[2] / 2 + np.pi / 2) @ self.v * self.dt * 0.5
        return x[:2] - m, np.column_stack([np.eye(2), -dm])

    @property
    def information(self):
        return self.weight * np.linalg.inv(self.covariance * self.dt**2)


def _correspond(tree, src, tgt, x, params: IcpParams):
    R = rot(x[2])
    p = src @ R.T + x[:2]
    d, j = tree.query(p, distance_upper_bound=params.max_correspondence)
    ok = np.isfinite(d)
    return p, d, j, ok, R


def icp_cost(source: PointCloud2, target: PointCloud2, delta, params: IcpParams = IcpParams()) -> float:
    """Mean robust-weighted residual of ``source`` moved by ``delta`` against ``target``."""
    x = np.asarray(delta.as_tuple() if isinstance(delta, Pose2) else delta, dtype=float)
    tree = cKDTree(target.xy)
    _, d, _, ok, _ = _correspond(tree, source.xy, target.xy, x, params)
    if ok.sum() < params.min_correspondences:
        raise RegistrationError("too few correspondences")
    return float(np.mean(d[ok]))


def icp_register(source: PointCloud2, target: PointCloud2, init=Pose2(),
                 params: IcpParams = IcpParams(), prior: VelocityPrior | None = None) -> IcpResult:
    """Point-to-point ICP with Cauchy weights, solved by Gauss-Newton on (tx, ty, yaw).

    Returns the pose of the source frame expressed in the target frame.
    """
    if len(source) == 0 or len(target) == 0:
        raise RegistrationError("empty point cloud")
    src, tgt = source.xy, target.xy
    tree = cKDTree(tgt)
    x = np.asarray(init.as_tuple() if isinstance(init, Pose2) else init, dtype=float).copy()
    inv_var = 1.0 / params.point_sigma**2
    it = 0
    for it in range(1, params.max_iterations + 1):
        p, d, j, ok, R = _correspond(tree, src, tgt, x, params)
        n = int(ok.sum())
        if n < params.min_correspondences:
            raise RegistrationError(f"only {n} correspondences")
        r = p[ok] - tgt[j[ok]]
        w = inv_var / (1.0 + (d[ok] / params.cauchy_scale) ** 2)
        s = src[ok]
        # d(R s)/d yaw
        jth = np.column_stack([-(R[1, 0] * s[:, 0] + R[1, 1] * s[:, 1]),
                               R[0, 0] * s[:, 0] + R[0, 1] * s[:, 1]])
        H = np.empty((3, 3))
        g = np.empty(3)
        H[0, 0], H[1, 1] = w.sum(), w.sum()
        H[0, 1] = H[1, 0] = 0.0
        H[0, 2] = H[2, 0] = np.sum(w * jth[:, 0])
        H[1, 2] = H[2, 1] = np.sum(w * jth[:, 1])
        H[2, 2] = np.sum(w * (jth[:, 0] ** 2 + jth[:, 1] ** 2))
        g[0], g[1] = np.sum(w * r[:, 0]), np.sum(w * r[:, 1])
        g[2] = np.sum(w * (jth[:, 0] * r[:, 0] + jth[:, 1] * r[:, 1]))
        if prior is not None:
            e, J = prior.residual(x)
            L = prior.information
            H += J.T @ L @ J
            g += J.T @ L @ e
        H[np.diag_indices(3)] += 1e-9
        dx = -np.linalg.solve(H, g)
        x += dx
        if np.hypot(dx[0], dx[1]) < params.tol_translation and abs(dx[2]) < params.tol_rotation:
            break
    _, d, _, ok, _ = _correspond(tree, src, tgt, x, params)
    cost = float(np.mean(d[ok])) if ok.any() else float("inf")
    return IcpResult(Pose2(float(x[0]), float(x[1]), float(x[2])), cost, it, int(ok.sum()))


def icp_register_with_velocity(source: PointCloud2, target: PointCloud2, init, pseudo_v, dt: float,
                               weight: float = 1.0, params: IcpParams = IcpParams(),
                               cov_floor: float = 0.05**2) -> IcpResult:
    """ICP plus a term tying the translation to ``pseudo_v`` integrated over ``dt``.

    Registration runs from ``init`` and from the velocity prediction, and the
    solution with the lower total robust cost wins. With fixed
    correspondences point-to-point ICP looks stiff even along directions the
    scene cannot observe, so a single start would only creep towards the
    velocity term's value.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(pseudo_v, VelocityPseudoMeasurement):
        v, cov = pseudo_v.v, pseudo_v.covariance
    else:
        v, cov = pseudo_v
    cov = np.asarray(cov, float) + cov_floor * np.eye(2)
    if weight <= 0:
        return icp_register(source, target, init, params)
    prior = VelocityPrior(np.asarray(v, float), cov, dt, weight)
    init = init if isinstance(init, Pose2) else Pose2(*init)
    t = rot(init.yaw / 2) @ prior.v * dt
    starts = [init, Pose2(float(t[0]), float(t[1]), init.yaw)]
    tree = cKDTree(target.xy)
    best, best_j = None, np.inf
    for st in starts:
        try:
            res = icp_register(source, target, st, params, prior)
        except RegistrationError:
            continue
        j = _objective(tree, source.xy, res.delta, params, prior)
        if j < best_j:
            best, best_j = res, j
    if best is None:
        raise RegistrationError("registration failed from every start")
    return best


def _objective(tree, src, delta: Pose2, params: IcpParams, prior=None) -> float:
    """Total robust cost; points without a partner pay the capped penalty."""
    x = np.array(delta.as_tuple())
    R = rot(x[2])
    d, _ = tree.query(src @ R.T + x[:2], distance_upper_bound=params.max_correspondence)
    d = np.minimum(d, params.max_correspondence)
    c = params.cauchy_scale
    j = float(np.sum(0.5 * c * c * np.log1p((d / c) ** 2))) / params.point_sigma**2
    if prior is not None:
        e, _ = prior.residual(x)
        j += 0.5 * float(e @ prior.information @ e)
    return j


@dataclass
class Trajectory:
    t_us: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray
    flags: np.ndarray
    mode: str = ""

    def __len__(self):
        return len(self.t_us)

    @classmethod
    def from_poses(cls, poses, flags=None, mode=""):
        poses = list(poses)
        return cls(np.array([p.timestamp for p in poses], np.int64),
                   np.array([p.x for p in poses]), np.array([p.y for p in poses]),
                   np.array([p.yaw for p in poses]),
                   np.zeros(len(poses), bool) if flags is None else np.asarray(flags, bool), mode)

    def pose(self, i) -> Pose2:
        return Pose2(float(self.x[i]), float(self.y[i]), float(self.yaw[i]), int(self.t_us[i]))


@dataclass(frozen=True)
class OdometryParams:
    estimator: EstimatorParams = EstimatorParams()
    icp: IcpParams = IcpParams()
    k_strongest: int = 3
    min_snr: float = 4.0
    velocity_weight: float = 1.0
    velocity_cov_floor: float = 0.05**2
    deskew: bool = True


@dataclass
class ScanProducts:
    """What the odometry modes need from one scan."""

    timestamp: int
    pseudo: VelocityPseudoMeasurement | None
    cloud: PointCloud2


def initial_velocity_of(dataset, t_us=None):
    """(vx, vy, omega) from ground truth at ``t_us`` (default: first scan midpoint), else zeros."""
    if getattr(dataset, "groundtruth", None) is None:
        return (0.0, 0.0, 0.0)
    if t_us is None:
        t_us = dataset.scans[0].mid_timestamp
    _, _, _, gvx, gvy, gom = dataset.groundtruth_at(np.array([t_us], np.int64))
    return (float(gvx[0]), float(gvy[0]), float(gom[0]))


def scan_products(scans, params: OdometryParams = OdometryParams(), with_velocity: bool = True,
                  prior_v=None):
    """Filter each scan once and derive both the pseudo-measurement and the point cloud.

    ``prior_v`` gates the first scan's RANSAC like a previous estimate would.
    """
    out = []
    prev = None if prior_v is None else np.asarray(prior_v, float)[:2]
    for scan in scans:
        F = filter_azimuths(scan.intensities, params.estimator.extract.filter)
        pseudo = None
        if with_velocity:
            pseudo = estimate_scan_velocity(scan, prev, params.estimator, filtered=F)
            prev = pseudo
        cloud = extract_points(scan, params.k_strongest, min_snr=params.min_snr, filtered=F)
        out.append(ScanProducts(scan.mid_timestamp, pseudo, cloud))
    return out


def _gyro_at(dataset, t_us):
    if dataset.gyro_t_us is None or dataset.gyro_omega is None or len(dataset.gyro_t_us) == 0:
        raise ValueError("doppler_gyro mode needs a gyro stream")
    i = int(np.argmin(np.abs(dataset.gyro_t_us - t_us)))
    return float(dataset.gyro_omega[i])


def _delta_velocity(delta: Pose2, dt: float):
    t = rot(-delta.yaw / 2) @ np.array([delta.x, delta.y]) / dt
    return np.array([t[0], t[1], delta.yaw / dt])


def _predict(v3, dt):
    dx, dy = se2_exp_translation(v3[0] * dt, v3[1] * dt, v3[2] * dt)
    return Pose2(float(dx), float(dy), float(v3[2] * dt))


def run_odometry(dataset, mode: str, params: OdometryParams = OdometryParams(), products=None,
                 initial_velocity=None, initial_pose: Pose2 | None = None) -> Trajectory:
    """Chain per-scan motion estimates into a trajectory stamped at scan midpoints.

    ``initial_velocity`` (vx, vy, omega) seeds the first ICP guess, the
    first causal Doppler correction and the first RANSAC gate; it defaults to the dataset's ground
    truth at the first scan when that is available.
    """
    mode = canonical_mode(mode)
    scans = dataset.scans
    if initial_velocity is None:
        initial_velocity = initial_velocity_of(dataset)
    if products is None:
        products = scan_products(scans, params, mode not in ("icp", "icp_doppler_corrected"), initial_velocity)
    ts = np.array([p.timestamp for p in products], np.int64)
    start = initial_pose or Pose2()
    poses = [Pose2(start.x, start.y, start.yaw, int(ts[0]))]
    flags = [False]
    beta = dataset.config.beta
    v_prev = np.asarray(initial_velocity, dtype=float)

    if mode == "doppler_gyro":
        for k in range(len(products) - 1):
            dt = (ts[k + 1] - ts[k]) * 1e-6
            omega = _gyro_at(dataset, ts[k])
            pose = integrate_pose(poses[-1], products[k].pseudo.v, omega, dt)
            poses.append(replace(pose, timestamp=int(ts[k + 1])))
            flags.append(bool(products[k].pseudo.fallback))
        return Trajectory.from_poses(poses, flags, mode)

    def prepared(k, v, v3):
        c = products[k].cloud
        if mode != "icp":
            c = doppler_correct_points(c, v, beta)
        if params.deskew:
            c = deskew_points(c, v3, ts[k])
        return c

    def pseudo3(k, omega):
        v = products[k].pseudo.v
        return v, np.array([v[0], v[1], omega])

    if mode == "doppler_icp_fused":
        target = prepared(0, *pseudo3(0, v_prev[2]))
    else:
        target = prepared(0, v_prev[:2], v_prev)

    for k in range(len(products) - 1):
        dt = (ts[k + 1] - ts[k]) * 1e-6
        failed = False
        try:
            if mode == "doppler_icp_fused":
                pa, pb = products[k].pseudo, products[k + 1].pseudo
                source = prepared(k + 1, *pseudo3(k + 1, v_prev[2]))
                v_bar = 0.5 * (pa.v + pb.v)
                cov = 0.25 * (pa.covariance + pb.covariance)
                init = _predict(np.array([v_bar[0], v_bar[1], v_prev[2]]), dt)
                res = icp_register_with_velocity(source, target, init, (v_bar, cov), dt,
                                                 params.velocity_weight, params.icp,
                                                 params.velocity_cov_floor)
            else:
                source = prepared(k + 1, v_prev[:2], v_prev)
                res = icp_register(source, target, _predict(v_prev, dt), params.icp)
            delta = res.delta
        except RegistrationError as exc:
            log.warning("scan %d: registration failed (%s); extrapolating", k + 1, exc)
            delta = _predict(v_prev, dt)
            failed = True
            source = prepared(k + 1, v_prev[:2], v_prev)
        v_prev = _delta_velocity(delta, dt)
        poses.append(poses[-1].compose(delta, int(ts[k + 1])))
        flags.append(failed)
        target = source
    return Trajectory.from_poses(poses, flags, mode)
