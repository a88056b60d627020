import numpy as np
import pytest

from spindop import io
from spindop.doppler_extract import RadialVelocities, extract_radial_velocities
from spindop.ego_estimator import least_squares_velocity
from spindop.odometry import Trajectory
from spindop.radar_core import RadarConfig, RadarScan
from spindop.scan_sim import SceneSpec, TrajectorySpec, simulate_sequence

CFG = RadarConfig(num_bins=400)


@pytest.fixture(scope="module")
def dataset():
    scene = SceneSpec(np.array([[10.0, 3.0, 1.0], [-8.0, 5.0, 0.7], [4.0, -9.0, 1.2]]))
    traj = TrajectorySpec(knots=[(0, 2.0, 0.0, 0.1)])
    return simulate_sequence(scene, traj, 1.0, CFG, 5, gyro_noise=0.01, name="seqA")


def test_scan_file_size():
    cfg = RadarConfig(num_bins=3000)
    scan = RadarScan(3, cfg, cfg.azimuth_offsets_us(), cfg.azimuth_angles(), cfg.chirps(),
                     np.zeros((400, 3000), np.float32))
    assert io.scan_file_size(400, 3000) == 16 + 400 * (8 + 8 + 1 + 3000 * 4)
    assert len(_bytes(scan)) == io.scan_file_size(400, 3000)


def _bytes(scan, tmp=None):
    import tempfile, os
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "s.drs")
        io.write_scan_file(p, scan)
        return open(p, "rb").read()


def test_scan_round_trip(tmp_path, dataset):
    scan = dataset.scans[2]
    p = tmp_path / "scan_seqA_000002.drs"
    io.write_scan_file(p, scan)
    back = io.read_scan_file(p, CFG)
    assert back.scan_id == 2
    for f in ("timestamps", "angles", "chirps", "intensities"):
        assert np.array_equal(getattr(back, f), getattr(scan, f)), f
    assert back.intensities.dtype == np.float32
    io.write_scan_file(tmp_path / "again.drs", back)
    assert (tmp_path / "again.drs").read_bytes() == p.read_bytes()


def test_truncated_scan_names_azimuth(tmp_path, dataset):
    p = tmp_path / "s.drs"
    io.write_scan_file(p, dataset.scans[0])
    data = p.read_bytes()
    rec = 8 + 8 + 1 + 4 * CFG.num_bins
    p.write_bytes(data[:16 + 7 * rec + 100])
    with pytest.raises(io.FormatError, match="azimuth 7"):
        io.read_scan_file(p)


def test_bad_magic(tmp_path, dataset):
    p = tmp_path / "s.drs"
    io.write_scan_file(p, dataset.scans[0])
    data = bytearray(p.read_bytes())
    data[:4] = b"XXXX"
    p.write_bytes(bytes(data))
    with pytest.raises(io.FormatError, match="magic"):
        io.read_scan_file(p)


def test_non_alternating_chirp(tmp_path, dataset):
    scan = dataset.scans[0]
    scan = RadarScan(0, CFG, scan.timestamps, scan.angles, scan.chirps.copy(), scan.intensities)
    scan.chirps[5] = scan.chirps[4]
    p = tmp_path / "s.drs"
    io.write_scan_file(p, scan)
    with pytest.raises(io.FormatError, match="azimuth 5"):
        io.read_scan_file(p)


def test_config_round_trip(tmp_path):
    cfg = RadarConfig.from_beta(0.037, num_bins=1234, beamwidth_3db=0.03)
    io.write_config(tmp_path / "radar_config", cfg)
    assert io.read_config(tmp_path / "radar_config") == cfg
    assert "beta" not in (tmp_path / "radar_config").read_text()


def test_dataset_round_trip(tmp_path, dataset):
    io.write_dataset(tmp_path, dataset)
    back = io.read_dataset(tmp_path)
    assert back.config == CFG and back.name == "seqA" and len(back) == len(dataset)
    assert all(np.array_equal(a.intensities, b.intensities) for a, b in zip(back.scans, dataset.scans))
    for f in ("t_us", "x", "y", "yaw", "vx", "vy", "omega"):
        assert np.array_equal(getattr(back.groundtruth, f), getattr(dataset.groundtruth, f)), f
    assert np.array_equal(back.gyro_omega, dataset.gyro_omega)
    assert (tmp_path / "groundtruth.csv").read_text().splitlines()[0] == "t_us,x,y,yaw,vx,vy,omega"
    assert (tmp_path / "gyro.csv").read_text().splitlines()[0] == "t_us,omega"


def test_velocity_and_ego_csv(tmp_path, dataset):
    sets = [extract_radial_velocities(s) for s in dataset.scans[:2]]
    io.write_velocities(tmp_path / "v.csv", sets)
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0].startswith("# spindop-velocities v")
    assert lines[1] == "t_us,pair_index,theta,u,confidence,valid"
    assert len(lines) == 2 + 2 * 399
    back = io.read_velocities(tmp_path / "v.csv")
    assert np.array_equal(back.u[:399], sets[0].u)
    assert np.array_equal(back.valid[399:], sets[1].valid)

    # three targets are too few for RANSAC, so fit the synthetic rows directly
    est = [least_squares_velocity(RadialVelocities.synthetic(u, a), 1000 * k)
           for k, (u, a) in enumerate([(np.array([1.0, 2.0, 0.5]), np.array([0.1, 1.7, 3.0])),
                                       (np.array([-3.0, 0.2, 1.1]), np.array([0.4, 2.2, 4.0]))])]
    io.write_ego(tmp_path / "e.csv", est)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0].startswith("# spindop-egovel v")
    assert lines[1] == "t_us,vx,vy,cov_xx,cov_xy,cov_yy,inliers"
    back = io.read_ego(tmp_path / "e.csv")
    assert np.array_equal(back[1].v, est[1].v)
    assert np.array_equal(back[0].covariance, est[0].covariance)


def test_trajectory_round_trip(tmp_path):
    tr = Trajectory(np.array([1, 2, 3]), np.array([0.1, 0.2, 1 / 3]), np.zeros(3), np.array([0, 1e-17, -3.0]),
                    np.array([False, True, False]), "doppler_gyro")
    io.write_trajectory(tmp_path / "t.csv", tr)
    back = io.read_trajectory(tmp_path / "t.csv")
    assert back.mode == "doppler_gyro"
    for f in ("t_us", "x", "y", "yaw", "flags"):
        assert np.array_equal(getattr(back, f), getattr(tr, f)), f
