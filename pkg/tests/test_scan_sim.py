import numpy as np
import pytest

from spindop.radar_core import RadarConfig
from spindop.scan_sim import (
    DynamicObject,
    SceneError,
    SceneSpec,
    TrajectoryError,
    TrajectorySpec,
    Wall,
    builtin_scene,
    builtin_trajectory,
    simulate_scan,
    simulate_sequence,
)
from spindop.signal_dsp import filter_azimuths

from wall_helpers import wall_scan, zigzag_errors


def boresight_peaks(scan, lo, hi):
    """Sub-bin peak position of each azimuth within bins [lo, hi)."""
    F = filter_azimuths(scan.intensities)[:, lo:hi]
    k = np.argmax(F, axis=1)
    k = np.clip(k, 1, hi - lo - 2)
    r = np.arange(len(k))
    a, b, c = F[r, k - 1], F[r, k], F[r, k + 1]
    return lo + k + 0.5 * (a - c) / (a - 2 * b + c)


def test_trajectory_validation():
    with pytest.raises(TrajectoryError):
        TrajectorySpec(knots=[(1, 0, 0, 0), (0, 0, 0, 0)])
    with pytest.raises(TrajectoryError):
        TrajectorySpec(knots=[(0, 31, 0, 0)])


def test_trajectory_pose_matches_velocity():
    traj = TrajectorySpec(knots=[(0, 10, 0, 0.1), (5, 20, 1, -0.1)])
    t = np.linspace(0.5, 4.5, 9)
    h = 1e-4
    x0, y0, yaw0 = traj.pose(t - h)
    x1, y1, yaw1 = traj.pose(t + h)
    _, _, yaw = traj.pose(t)
    c, s = np.cos(yaw), np.sin(yaw)
    dx, dy = (x1 - x0) / (2 * h), (y1 - y0) / (2 * h)
    vx, vy, om = traj.velocity(t)
    assert np.allclose(c * dx + s * dy, vx, atol=1e-3)
    assert np.allclose(-s * dx + c * dy, vy, atol=1e-3)
    assert np.allclose((yaw1 - yaw0) / (2 * h), om, atol=1e-3)


def test_scene_invariants():
    with pytest.raises(SceneError):
        SceneSpec(np.array([[1.0, 2.0, 0.0]]))
    with pytest.raises(SceneError):
        SceneSpec(np.zeros((0, 3)), [Wall((0, 5), (10, 5)), Wall((0, -5), (10, -4))], scene_kind="tunnel")
    with pytest.raises(SceneError):
        builtin_scene("forest")


def test_builtin_scenes():
    tunnel = builtin_scene("tunnel")
    assert len(tunnel.walls) == 2 and len(tunnel.dynamic_objects) == 0
    sky = builtin_scene("skyway")
    assert len(sky.dynamic_objects) >= 2
    assert all(abs(o.speed - sky.nominal_speed) <= 3.0 for o in sky.dynamic_objects)
    sub = builtin_scene("suburbs")
    cfg = RadarConfig()
    assert sub.visible_feature_count(0, 0, cfg.max_range) >= 10 * tunnel.visible_feature_count(0, 0, cfg.max_range)


def test_static_wall_no_zigzag():
    scan, gt = wall_scan((0.0, 0.0))
    pk = boresight_peaks(scan, 900, 1000)
    near = np.cos(scan.angles) > 0.999
    up, dn = pk[near & (scan.chirps == 1)], pk[near & (scan.chirps == -1)]
    assert abs(np.mean(up) - np.mean(dn)) < 1.0
    assert np.mean(up) * scan.config.bin_resolution == pytest.approx(40.0, abs=scan.config.bin_resolution)


def test_moving_wall_zigzag_at_boresight():
    scan, gt = wall_scan((20.0, 0.0))
    res = scan.config.bin_resolution
    pk = boresight_peaks(scan, 850, 1000) * res
    truth = 40.0 - gt.x
    k = [0, 1]  # first up and down azimuths, facing the wall
    # u = -20: up returns read 1 m short, down returns 1 m long
    assert pk[k[0]] - truth[k[0]] == pytest.approx(-1.0, abs=res)
    assert pk[k[1]] - truth[k[1]] == pytest.approx(1.0, abs=res)


def test_zigzag_separation_per_pair():
    scan, gt = wall_scan((20.0, 0.0))
    err = zigzag_errors(scan, gt, (20.0, 0.0))
    assert len(err) > 100
    assert np.mean(err <= 1.0) >= 0.95


def test_dynamic_object_shift():
    cfg = RadarConfig()
    # object dead ahead receding at 10 m/s while the radar stands still
    obj = DynamicObject(30.0, 0.0, 0.0, 10.0, 0.0, length=0.02, width=0.02)
    scene = SceneSpec(np.zeros((0, 3)), [], [obj])
    traj = TrajectorySpec(knots=[(0, 0, 0, 0), (1, 0, 0, 0)])
    scan, gt = simulate_scan(scene, traj, 0, cfg, 3, 0)
    pk = boresight_peaks(scan, 600, 800)[:2] * cfg.bin_resolution
    t = scan.timestamps[:2] * 1e-6
    centre = 30.0 + 10.0 * t
    assert pk[0] - centre[0] == pytest.approx(0.5, abs=cfg.bin_resolution)
    assert pk[1] - centre[1] == pytest.approx(-0.5, abs=cfg.bin_resolution)


def test_empty_beam_is_noise_only():
    scene = SceneSpec(np.array([[30.0, 0.0, 1.0]]))
    traj = TrajectorySpec(knots=[(0, 0, 0, 0)])
    scan, _ = simulate_scan(scene, traj, 0, RadarConfig(), 0, 0)
    opposite = scan.intensities[200]
    assert opposite.max() < 0.5


def test_sequence_count_and_determinism():
    cfg = RadarConfig(num_bins=300)
    scene = SceneSpec(np.array([[5.0, 3.0, 1.0], [-4.0, 2.0, 1.0]]))
    traj = TrajectorySpec(knots=[(0, 1, 0, 0)])
    a = simulate_sequence(scene, traj, 10.0, cfg, 7)
    b = simulate_sequence(scene, traj, 10.0, cfg, 7)
    assert len(a) == 40
    assert all(np.array_equal(x.intensities, y.intensities) for x, y in zip(a.scans, b.scans))
    assert np.array_equal(a.groundtruth.x, b.groundtruth.x)
    c = simulate_sequence(scene, traj, 1.0, cfg, 8)
    assert not np.array_equal(a.scans[0].intensities, c.scans[0].intensities)


def test_tunnel_path_length():
    traj = TrajectorySpec(knots=[(0, 22, 0, 0)])
    x, y, _ = traj.pose(np.linspace(0, 60, 601))
    assert np.sum(np.hypot(np.diff(x), np.diff(y))) == pytest.approx(1320.0, abs=1e-6)


def test_builtin_trajectories_cover_800m():
    for kind in ("suburbs", "highway", "tunnel", "skyway"):
        traj, dur = builtin_trajectory(kind)
        x, y, _ = traj.pose(np.linspace(0, dur - 0.5, 2000))
        assert np.sum(np.hypot(np.diff(x), np.diff(y))) >= 800.0
