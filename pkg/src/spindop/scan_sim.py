"""Synthetic spinning Doppler radar data.

Scenes are 2D point/wall worlds, trajectories are piecewise-linear body
velocity profiles. Each azimuth is rendered at its own timestamp and pose, so
motion distortion and the alternating up/down Doppler offsets both appear in
the raw intensities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import se2_exp_translation
from .radar_core import RadarConfig, RadarScan, radial_projection

log = logging.getLogger(__name__)

SCENE_KINDS = ("suburbs", "highway", "tunnel", "skyway", "custom")
MAX_SPEED = 30.0


class SceneError(ValueError):
    pass


class TrajectoryError(ValueError):
    pass


# --------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectorySpec:
    """Body velocity knots ``(t_s, v_x, v_y, omega)`` with linear interpolation.

    Velocities are held constant before the first and after the last knot.
    Poses come from integrating the profile on a fixed grid.
    """

    knots: list
    x0: float = 0.0
    y0: float = 0.0
    yaw0: float = 0.0
    grid_dt: float = 1e-3

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        if k.ndim != 2 or k.shape[1] != 4 or len(k) == 0:
            raise TrajectoryError("knots must be a non-empty list of (t, vx, vy, omega)")
        if np.any(np.diff(k[:, 0]) <= 0):
            raise TrajectoryError("knots must be strictly time-ordered")
        speed = np.hypot(k[:, 1], k[:, 2])
        if np.any(speed > MAX_SPEED):
            raise TrajectoryError(f"speed exceeds {MAX_SPEED} m/s")
        self._k = k
        self._table_t = None

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        k = self._k
        return tuple(np.interp(t, k[:, 0], k[:, j]) for j in (1, 2, 3))

    def _step(self, t_start, dt, yaw_start):
        vx, vy, om = self.velocity(t_start + 0.5 * dt)
        dx, dy = se2_exp_translation(vx * dt, vy * dt, om * dt)
        c, s = np.cos(yaw_start), np.sin(yaw_start)
        return c * dx - s * dy, s * dx + c * dy, om * dt

    def _ensure_table(self, t_max: float):
        if self._table_t is not None and self._table_t[-1] >= t_max:
            return
        n = int(math.ceil(max(t_max, 1.0) / self.grid_dt)) + 2
        tg = np.arange(n + 1) * self.grid_dt
        vx, vy, om = self.velocity(tg[:-1] + 0.5 * self.grid_dt)
        dyaw = om * self.grid_dt
        yaw = self.yaw0 + np.concatenate([[0.0], np.cumsum(dyaw)])
        dx, dy = se2_exp_translation(vx * self.grid_dt, vy * self.grid_dt, dyaw)
        c, s = np.cos(yaw[:-1]), np.sin(yaw[:-1])
        x = self.x0 + np.concatenate([[0.0], np.cumsum(c * dx - s * dy)])
        y = self.y0 + np.concatenate([[0.0], np.cumsum(s * dx + c * dy)])
        self._table_t, self._table = tg, (x, y, yaw)

    def pose(self, t):
        """World pose ``(x, y, yaw)`` at time(s) ``t`` >= 0 seconds."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise TrajectoryError("trajectory starts at t = 0")
        self._ensure_table(float(np.max(t)) if t.size else 0.0)
        i = np.minimum((t / self.grid_dt).astype(np.int64), len(self._table_t) - 2)
        t_i = self._table_t[i]
        x, y, yaw = (a[i] for a in self._table)
        dxw, dyw, dyaw = self._step(t_i, t - t_i, yaw)
        return x + dxw, y + dyw, yaw + dyaw

    @property
    def t_end(self) -> float:
        return float(self._k[-1, 0])

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "yaw0": self.yaw0,
                "knots": [list(map(float, row)) for row in self._k]}


# --------------------------------------------------------------------------
# scenes


@dataclass
class Wall:
    start: tuple
    end: tuple
    reflectivity: float = 1.0
    spacing: float = 0.1

    def sample(self):
        p0, p1 = np.asarray(self.start, float), np.asarray(self.end, float)
        length = float(np.hypot(*(p1 - p0)))
        n = max(int(math.ceil(length / self.spacing)), 1) + 1
        s = np.linspace(0.0, 1.0, n)[:, None]
        d = (p1 - p0) / max(length, 1e-12)
        return p0 + s * (p1 - p0), np.array([-d[1], d[0]])


@dataclass
class DynamicObject:
    """Rectangular object moving at constant world velocity."""

    x: float
    y: float
    yaw: float
    vx: float
    vy: float
    length: float = 4.5
    width: float = 1.8
    reflectivity: float = 1.0
    spacing: float = 0.25

    def outline(self) -> np.ndarray:
        hl, hw = self.length / 2, self.width / 2
        corners = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw), (hl, hw)]
        pts = []
        for (ax, ay), (bx, by) in zip(corners[:-1], corners[1:]):
            n = max(int(math.ceil(math.hypot(bx - ax, by - ay) / self.spacing)), 1)
            s = np.arange(n) / n
            pts.append(np.column_stack([ax + s * (bx - ax), ay + s * (by - ay)]))
        local = np.vstack(pts)
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.column_stack([self.x + c * local[:, 0] - s * local[:, 1],
                                self.y + s * local[:, 0] + c * local[:, 1]])

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass
class SceneSpec:
    static_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    walls: list = field(default_factory=list)
    dynamic_objects: list = field(default_factory=list)
    noise_floor_sigma: float = 0.05
    floor_offset: float | None = None
    scene_kind: str = "custom"
    blob_sigma_bins: float = 2.0
    range_attenuation: bool = False
    min_range: float = 2.0
    extent: float = 1000.0
    sparsity_threshold: float = 0.1
    nominal_speed: float | None = None

    def __post_init__(self):
        self.static_points = np.asarray(self.static_points, dtype=float).reshape(-1, 3)
        if self.scene_kind not in SCENE_KINDS:
            raise SceneError(f"unknown scene kind {self.scene_kind!r}")
        if np.any(self.static_points[:, 2] <= 0):
            raise SceneError("reflectivity must be positive")
        if any(w.reflectivity <= 0 for w in self.walls) or any(
                o.reflectivity <= 0 for o in self.dynamic_objects):
            raise SceneError("reflectivity must be positive")
        if not (len(self.static_points) or self.walls or self.dynamic_objects):
            raise SceneError("scene is empty")
        if self.scene_kind == "tunnel":
            if len(self.walls) != 2 or len(self.static_points):
                raise SceneError("tunnel scenes hold exactly two walls and nothing else")
            (_, n0), (_, n1) = self.walls[0].sample(), self.walls[1].sample()
            if abs(abs(float(n0 @ n1)) - 1.0) > 1e-9:
                raise SceneError("tunnel walls must be parallel")
        if self.scene_kind == "skyway":
            if self.static_feature_density() >= self.sparsity_threshold:
                raise SceneError("skyway static features are too dense")
            if len(self.dynamic_objects) < 2:
                raise SceneError("skyway scenes need at least two vehicles")

    @property
    def noise_floor(self) -> float:
        return 3.0 * self.noise_floor_sigma if self.floor_offset is None else self.floor_offset

    def static_feature_density(self) -> float:
        """Static features (point targets and walls) per metre of scene extent."""
        return (len(self.static_points) + len(self.walls)) / self.extent

    def visible_feature_count(self, x: float, y: float, max_range: float) -> int:
        n = int(np.count_nonzero(np.hypot(self.static_points[:, 0] - x,
                                          self.static_points[:, 1] - y) <= max_range))
        for w in self.walls:
            pts, _ = w.sample()
            n += bool(np.any(np.hypot(pts[:, 0] - x, pts[:, 1] - y) <= max_range))
        return n

    @cached_property
    def static_cloud(self):
        """All static scatterers as ``(xy, reflectivity, normals)``.

        Point targets scatter isotropically and carry a NaN normal.
        """
        xy = [self.static_points[:, :2]]
        refl = [self.static_points[:, 2]]
        normals = [np.full((len(self.static_points), 2), np.nan)]
        for w in self.walls:
            pts, n = w.sample()
            xy.append(pts)
            refl.append(np.full(len(pts), w.reflectivity))
            normals.append(np.tile(n, (len(pts), 1)))
        return np.vstack(xy), np.concatenate(refl), np.vstack(normals)

    @cached_property
    def dynamic_cloud(self):
        """Dynamic points at t = 0 with their world velocities and reflectivity."""
        if not self.dynamic_objects:
            return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0)
        xy, vel, refl = [], [], []
        for o in self.dynamic_objects:
            pts = o.outline()
            xy.append(pts)
            vel.append(np.tile([o.vx, o.vy], (len(pts), 1)))
            refl.append(np.full(len(pts), o.reflectivity))
        return np.vstack(xy), np.vstack(vel), np.concatenate(refl)


# --------------------------------------------------------------------------
# ground truth and datasets


@dataclass
class GroundTruth:
    """Per-azimuth ground truth: pose, body velocity and the radial velocity a
    static target would show along each beam."""

    t_us: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    omega: np.ndarray
    u_static: np.ndarray | None = None

    @classmethod
    def concat(cls, parts) -> "GroundTruth":
        parts = list(parts)
        fields_ = ("t_us", "x", "y", "yaw", "vx", "vy", "omega")
        out = {f: np.concatenate([getattr(p, f) for p in parts]) for f in fields_}
        if all(p.u_static is not None for p in parts):
            out["u_static"] = np.concatenate([p.u_static for p in parts])
        return cls(**out)

    def __len__(self):
        return len(self.t_us)

    def nearest_index(self, t_us) -> np.ndarray:
        t_us = np.asarray(t_us)
        i = np.clip(np.searchsorted(self.t_us, t_us), 1, len(self.t_us) - 1)
        left = self.t_us[i - 1]
        right = self.t_us[i]
        return np.where(np.abs(t_us - left) <= np.abs(right - t_us), i - 1, i)

    def decimate(self, stride: int) -> "GroundTruth":
        sl = slice(None, None, stride)
        return GroundTruth(self.t_us[sl], self.x[sl], self.y[sl], self.yaw[sl],
                           self.vx[sl], self.vy[sl], self.omega[sl],
                           None if self.u_static is None else self.u_static[sl])


@dataclass
class Dataset:
    config: RadarConfig
    scans: list
    groundtruth: GroundTruth
    gyro_t_us: np.ndarray | None = None
    gyro_omega: np.ndarray | None = None
    name: str = "0000"

    def __len__(self):
        return len(self.scans)

    def scan_groundtruth(self, i: int) -> GroundTruth:
        n = self.config.num_azimuths
        gt = self.groundtruth
        if len(gt) == n * len(self.scans):
            sl = slice(i * n, (i + 1) * n)
            return GroundTruth(gt.t_us[sl], gt.x[sl], gt.y[sl], gt.yaw[sl], gt.vx[sl],
                               gt.vy[sl], gt.omega[sl],
                               None if gt.u_static is None else gt.u_static[sl])
        raise ValueError("ground truth is not per-azimuth")

    def groundtruth_at(self, t_us):
        """Ground truth rows nearest to the given timestamps."""
        idx = self.groundtruth.nearest_index(t_us)
        g = self.groundtruth
        return g.x[idx], g.y[idx], g.yaw[idx], g.vx[idx], g.vy[idx], g.omega[idx]


# --------------------------------------------------------------------------
# rendering


def _beam_hits(px, py, sx, sy, bx, by, tan_half, r_lo, r_hi):
    """Boolean (azimuth, target) mask of targets inside each beam's cutoff cone."""
    dx = px - sx
    dy = py - sy
    along = dx * bx + dy * by
    cross = dy * bx - dx * by
    return (along > r_lo) & (along < r_hi) & (np.abs(cross) <= along * tan_half)


def _candidate_pairs(px, py, sx, sy, yaw, theta, cutoff):
    """(azimuth, point) index pairs that can possibly see each other.

    Each point is only tested against the azimuths around its bearing from
    the mid-scan pose, widened by how far that bearing can swing while the
    sensor moves during the rotation.
    """
    n = len(theta)
    step = 2 * math.pi / n
    mid = n // 2
    dx, dy = px - sx[mid], py - sy[mid]
    rho = np.hypot(dx, dy)
    travel = float(np.max(np.hypot(sx - sx[mid], sy - sy[mid])))
    swing = float(np.max(np.abs(yaw - yaw[mid])))
    phi = np.arctan2(dy, dx) - yaw[mid]
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = np.arcsin(np.minimum(1.0, travel / np.maximum(rho, 1e-9)))
    spread = np.where(rho <= travel, math.pi, spread)
    half = np.minimum(np.ceil((spread + swing + cutoff) / step).astype(np.int64) + 1, n // 2)
    centre = np.round(phi / step).astype(np.int64)
    width = 2 * half + 1
    m = np.repeat(np.arange(len(px)), width)
    start = np.cumsum(width) - width
    off = np.arange(len(m)) - np.repeat(start, width) - np.repeat(half, width)
    k = np.mod(centre[m] + off, n)
    return k, m


def simulate_scan(scene: SceneSpec, traj: TrajectorySpec, t0_us: int, config: RadarConfig,
                  rng_seed, scan_id: int = 0):
    """Render one rotation starting at ``t0_us``.

    Returns ``(RadarScan, GroundTruth)`` where the ground truth holds one row
    per azimuth.
    """
    n_az, nb, res = config.num_azimuths, config.num_bins, config.bin_resolution
    ts = int(t0_us) + config.azimuth_offsets_us()
    t = ts * 1e-6
    sx, sy, yaw = traj.pose(t)
    vx, vy, om = traj.velocity(t)
    c, s = np.cos(yaw), np.sin(yaw)
    vwx, vwy = c * vx - s * vy, s * vx + c * vy
    theta = config.azimuth_angles()
    bx, by = np.cos(yaw + theta), np.sin(yaw + theta)
    chirp = config.chirps().astype(float)
    # gaussian two-way pattern, half power at the 3 dB edge, cut at 1/16
    beam_sigma = (config.beamwidth_3db / 2) / math.sqrt(2 * math.log(2))
    tan_half = math.tan(config.beamwidth_3db)
    gain = lambda k, dx, dy: np.exp(  # noqa: E731
        -0.5 * (np.arctan2(dy * bx[k] - dx * by[k], dx * bx[k] + dy * by[k]) / beam_sigma) ** 2)
    sigma_b = scene.blob_sigma_bins
    r_hi = config.max_range + 4 * sigma_b * res + config.beta * MAX_SPEED * 2

    col = lambda a: a[:, None]  # noqa: E731
    ks, ranges, amps = [], [], []

    # static scatterers, pre-culled around the mid-scan pose
    xy, refl, normals = scene.static_cloud
    if len(xy):
        mid = n_az // 2
        reach = r_hi + float(np.hypot(sx[-1] - sx[0], sy[-1] - sy[0])) + 1.0
        near = np.nonzero(np.hypot(xy[:, 0] - sx[mid], xy[:, 1] - sy[mid]) < reach)[0]
        if len(near):
            k, m = _candidate_pairs(xy[near, 0], xy[near, 1], sx, sy, yaw, theta,
                                    config.beamwidth_3db)
            px, py = xy[near[m], 0], xy[near[m], 1]
            hit = _beam_hits(px, py, sx[k], sy[k], bx[k], by[k], tan_half, scene.min_range, r_hi)
            k, m_glob = k[hit], near[m[hit]]
            dx, dy = xy[m_glob, 0] - sx[k], xy[m_glob, 1] - sy[k]
            r = np.hypot(dx, dy)
            ux, uy = dx / r, dy / r
            u = -(vwx[k] * ux + vwy[k] * uy)
            amp = refl[m_glob] * gain(k, dx, dy)
            nrm = normals[m_glob]
            is_wall = ~np.isnan(nrm[:, 0])
            amp[is_wall] *= np.abs(nrm[is_wall, 0] * ux[is_wall] + nrm[is_wall, 1] * uy[is_wall])
            ks.append(k)
            ranges.append(r + chirp[k] * config.beta * u)
            amps.append(amp if not scene.range_attenuation else amp * np.minimum(1.0, (10.0 / r) ** 2))

    dxy, dvel, drefl = scene.dynamic_cloud
    if len(dxy):
        px = dxy[:, 0][None, :] + col(t) * dvel[:, 0][None, :]
        py = dxy[:, 1][None, :] + col(t) * dvel[:, 1][None, :]
        hit = _beam_hits(px, py, col(sx), col(sy), col(bx), col(by), tan_half,
                         scene.min_range, r_hi)
        k, m = np.nonzero(hit)
        dx, dy = px[k, m] - sx[k], py[k, m] - sy[k]
        r = np.hypot(dx, dy)
        ux, uy = dx / r, dy / r
        u = (dvel[m, 0] - vwx[k]) * ux + (dvel[m, 1] - vwy[k]) * uy
        amp = drefl[m] * gain(k, dx, dy)
        ks.append(k)
        ranges.append(r + chirp[k] * config.beta * u)
        amps.append(amp if not scene.range_attenuation else amp * np.minimum(1.0, (10.0 / r) ** 2))

    signal = np.zeros(n_az * nb)
    if ks:
        k = np.concatenate(ks)
        rm = np.concatenate(ranges)
        amp = np.concatenate(amps)
        keep = (rm >= 0) & (rm < nb * res)
        k, rm, amp = k[keep], rm[keep], amp[keep]
        centre = rm / res
        w = int(math.ceil(4 * sigma_b))
        offs = np.arange(-w, w + 1)
        bins = np.floor(centre).astype(np.int64)[:, None] + offs[None, :]
        vals = amp[:, None] * np.exp(-((bins - centre[:, None]) ** 2) / (2 * sigma_b**2))
        ok = (bins >= 0) & (bins < nb)
        flat = (k[:, None] * nb + bins)[ok]
        signal = np.bincount(flat, weights=vals[ok], minlength=n_az * nb)

    rng = np.random.default_rng(rng_seed)
    noise = rng.normal(0.0, scene.noise_floor_sigma, n_az * nb)
    floor = scene.noise_floor
    intensity = (np.maximum(signal + noise, -floor) + floor).astype(np.float32).reshape(n_az, nb)

    scan = RadarScan(scan_id, config, ts, theta, config.chirps(), intensity)
    gt = GroundTruth(ts, sx, sy, yaw, vx, vy, om, radial_projection((vx, vy), theta))
    return scan, gt


def simulate_sequence(scene: SceneSpec, traj: TrajectorySpec, duration: float,
                      config: RadarConfig, rng_seed: int, gyro_noise: float = 0.0,
                      gyro_bias: float = 0.0, name: str = "0000") -> Dataset:
    """Render ``floor(duration * rotation_rate)`` consecutive rotations from t = 0.

    Gyro readings are taken once per scan at the scan midpoint.
    """
    n_scans = int(math.floor(duration * config.rotation_rate + 1e-9))
    if n_scans < 1:
        raise ValueError("duration must cover at least one rotation")
    scans, gts = [], []
    for i in range(n_scans):
        scan, gt = simulate_scan(scene, traj, i * config.period_us, config,
                                 np.random.SeedSequence([rng_seed, i]), scan_id=i)
        scans.append(scan)
        gts.append(gt)
    gyro_t = np.array([sc.mid_timestamp for sc in scans], dtype=np.int64)
    _, _, om = traj.velocity(gyro_t * 1e-6)
    g_rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0x67797230]))
    gyro = om + gyro_bias + (g_rng.normal(0.0, gyro_noise, len(gyro_t)) if gyro_noise > 0 else 0.0)
    return Dataset(config, scans, GroundTruth.concat(gts), gyro_t, np.asarray(gyro, float), name)


# --------------------------------------------------------------------------
# builtin scenes


def _scatter(rng, n, x_range, y_abs_range, refl=(0.5, 1.5)):
    x = rng.uniform(*x_range, n)
    y = rng.uniform(*y_abs_range, n) * rng.choice([-1.0, 1.0], n)
    return np.column_stack([x, y, rng.uniform(*refl, n)])


def _building(rng, cx, cy, spacing=0.2):
    w, h = rng.uniform(8, 20), rng.uniform(8, 15)
    yaw = rng.uniform(0, np.pi / 2)
    c, s = math.cos(yaw), math.sin(yaw)
    corners = [(-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)]
    world = [(cx + c * a - s * b, cy + s * a + c * b) for a, b in corners]
    return [Wall(world[i], world[(i + 1) % 4], 1.0, spacing) for i in range(4)]


def builtin_scene(kind: str, seed: int = 0) -> SceneSpec:
    """Canonical scene for one of the four sequence archetypes."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5CE7E]))
    if kind == "suburbs":
        pts = _scatter(rng, 2500, (-150, 1150), (8, 160))
        walls = []
        for _ in range(120):
            cx = rng.uniform(-150, 1150)
            cy = rng.uniform(20, 150) * rng.choice([-1.0, 1.0])
            walls += _building(rng, cx, cy)
        return SceneSpec(pts, walls, [], scene_kind="suburbs", extent=1300.0)
    if kind == "highway":
        town = _scatter(rng, 500, (-150, 200), (8, 120))
        side = _scatter(rng, 320, (-150, 1150), (11, 40))
        walls = [Wall((-150, 9.0), (1150, 9.0), 0.6, 0.2),
                 Wall((-150, -9.0), (1150, -9.0), 0.6, 0.2)]
        cars = [DynamicObject(40.0, 3.5, 0.0, 24.0, 0.0),
                DynamicObject(-50.0, -3.5, 0.0, 21.0, 0.0)]
        return SceneSpec(np.vstack([town, side]), walls, cars, scene_kind="highway",
                         extent=1300.0)
    if kind == "tunnel":
        walls = [Wall((-15.0, 5.0), (825.0, 5.0), 1.0, 0.1),
                 Wall((-15.0, -5.0), (825.0, -5.0), 1.0, 0.1)]
        return SceneSpec(np.zeros((0, 3)), walls, [], scene_kind="tunnel", extent=840.0)
    if kind == "skyway":
        v0 = 26.0
        xs = np.arange(-150.0, 2410.0, 50.0)
        posts = np.vstack([np.column_stack([xs, np.full_like(xs, 8.5), np.full_like(xs, 0.5)]),
                           np.column_stack([xs + 25.0, np.full_like(xs, -8.5), np.full_like(xs, 0.5)])])
        walls = [Wall((-150, 7.5), (2410, 7.5), 0.5, 0.2),
                 Wall((-150, -7.5), (2410, -7.5), 0.5, 0.2)]
        jitter = rng.uniform(-1.0, 1.0, 6)
        cars = [
            DynamicObject(25.0 + 3 * jitter[0], 0.0, 0.0, v0 + 0.5, 0.0, reflectivity=1.5),
            DynamicObject(-22.0 + 3 * jitter[1], 0.0, 0.0, v0 - 0.5, 0.0, reflectivity=1.5),
            DynamicObject(8.0 + 3 * jitter[2], 3.5, 0.0, v0, 0.0, 16.0, 2.5, 1.5),
            DynamicObject(-30.0 + 3 * jitter[3], -3.5, 0.0, v0 + 1.0, 0.0, 14.0, 2.5, 1.5),
            DynamicObject(60.0 + 3 * jitter[4], 3.5, 0.0, v0 - 1.5, 0.0, reflectivity=1.5),
            DynamicObject(45.0 + 3 * jitter[5], -3.5, 0.0, v0 + 1.5, 0.0, reflectivity=1.5),
        ]
        return SceneSpec(posts, walls, cars, scene_kind="skyway", extent=2560.0,
                         nominal_speed=v0)
    raise SceneError(f"unknown builtin scene {kind!r}")


def builtin_trajectory(kind: str) -> tuple[TrajectorySpec, float]:
    """Default trajectory and duration (s) for a builtin scene kind."""
    if kind == "suburbs":
        knots = [(0, 15.0, 0, 0), (8, 16.5, 0, 0), (10, 16.5, 0, 0), (12, 16.0, 0, 0.04),
                 (14, 15.5, 0, 0), (16, 15.0, 0, -0.04), (18, 14.5, 0, 0), (30, 15.0, 0, 0),
                 (32, 15.0, 0, -0.04), (34, 15.5, 0, 0), (36, 16.0, 0, 0.04), (38, 16.0, 0, 0),
                 (44, 14.0, 0, 0), (56, 16.0, 0, 0)]
        return TrajectorySpec(knots), 56.0
    if kind == "highway":
        knots = [(0, 18.0, 0, 0), (10, 23.0, 0, 0), (12, 23.0, 0, 0), (13, 23.0, 0, 0.05),
                 (14, 23.0, 0, 0), (15, 23.0, 0, -0.05), (16, 23.0, 0, 0), (26, 21.0, 0, 0),
                 (38, 24.0, 0, 0)]
        return TrajectorySpec(knots), 38.0
    if kind == "tunnel":
        knots = [(0, 23.0, 0, 0), (8, 23.0, 0, 0), (16, 17.0, 0, 0), (26, 17.0, 0, 0),
                 (34, 23.0, 0, 0), (40, 23.0, 0, 0)]
        return TrajectorySpec(knots), 40.0
    if kind == "skyway":
        knots = [(0, 26.0, 0, 0), (6, 27.5, 0, 0), (14, 24.5, 0, 0), (22, 24.5, 0, 0),
                 (28, 27.5, 0, 0), (33, 26.0, 0, 0)]
        return TrajectorySpec(knots), 33.0
    raise SceneError(f"unknown builtin trajectory {kind!r}")


# --------------------------------------------------------------------------
# config files


def scene_from_dict(d: dict) -> SceneSpec:
    if "base" in d:
        base = builtin_scene(d["base"], int(d.get("seed", 0)))
    else:
        base = None
    walls = [Wall(tuple(w["start"]), tuple(w["end"]), float(w.get("reflectivity", 1.0)),
                  float(w.get("spacing", 0.1))) for w in d.get("walls", [])]
    objs = [DynamicObject(**o) for o in d.get("dynamic_objects", [])]
    pts = np.asarray(d.get("static_points", []), dtype=float).reshape(-1, 3)
    if base is not None:
        pts = np.vstack([base.static_points, pts])
        walls = base.walls + walls
        objs = base.dynamic_objects + objs
    keys = ("noise_floor_sigma", "floor_offset", "blob_sigma_bins", "range_attenuation",
            "min_range", "extent", "sparsity_threshold", "nominal_speed")
    kw = {k: d[k] for k in keys if k in d}
    kind = d.get("kind", base.scene_kind if base is not None else "custom")
    return SceneSpec(pts, walls, objs, scene_kind=kind, **kw)


def load_scene_file(path) -> SceneSpec:
    import yaml

    with open(path) as f:
        return scene_from_dict(yaml.safe_load(f) or {})


def load_trajectory_file(path) -> TrajectorySpec:
    import yaml

    with open(path) as f:
        d = yaml.safe_load(f) or {}
    return TrajectorySpec(d["knots"], float(d.get("x0", 0.0)), float(d.get("y0", 0.0)),
                          float(d.get("yaw0", 0.0)))
