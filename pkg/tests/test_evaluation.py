import numpy as np
import pytest

from spindop.evaluation import DEFAULT_LENGTHS, EmptyReportError, associate, combine_reports, kitti_drift
from spindop.odometry import Trajectory


def straight(n=1001, length=1000.0, scale=1.0, yaw=0.0):
    s = np.linspace(0, length, n) * scale
    return Trajectory(np.arange(n, dtype=np.int64) * 250_000, s * np.cos(yaw), s * np.sin(yaw),
                      np.full(n, yaw), np.zeros(n, bool))


def arc(n=1001, radius=200.0):
    a = np.linspace(0, 1000.0 / radius, n)
    return Trajectory(np.arange(n, dtype=np.int64) * 250_000, radius * np.sin(a),
                      radius * (1 - np.cos(a)), a, np.zeros(n, bool))


def test_identity_is_zero():
    gt = arc()
    rep = kitti_drift(gt, gt)
    assert all(v == pytest.approx(0, abs=1e-9) for v in rep.per_length.values())
    assert rep.mean == pytest.approx(0, abs=1e-9)


def test_scale_inflation_one_percent():
    rep = kitti_drift(straight(scale=1.01), straight())
    assert len(rep.per_length) == 8
    assert list(rep.per_length) == list(DEFAULT_LENGTHS)
    for v in rep.per_length.values():
        assert v == pytest.approx(1.0, abs=0.01)


def test_heading_offset_is_invisible():
    # a constant frame rotation does not change relative poses
    rep = kitti_drift(straight(yaw=0.3), straight())
    assert rep.mean == pytest.approx(0.0, abs=1e-9)


def test_mean_is_mean_of_lengths():
    gt = arc()
    est = Trajectory(gt.t_us, gt.x * 1.02, gt.y, gt.yaw * 0.99, gt.flags)
    rep = kitti_drift(est, gt)
    assert rep.mean == pytest.approx(np.mean(list(rep.per_length.values())))
    assert all(v >= 0 for v in rep.per_length.values())
    assert rep.mean_rotation > 0


def test_short_trajectory_is_empty():
    with pytest.raises(EmptyReportError):
        kitti_drift(straight(length=50.0), straight(length=50.0))


def test_association_nearest():
    gt_t = np.array([0, 100, 200, 300])
    assert associate(np.array([40, 60, 260]), gt_t).tolist() == [0, 1, 3]
    with pytest.raises(ValueError):
        associate(np.array([40]), gt_t, max_dt_us=10)


def test_dense_groundtruth_is_associated():
    est = straight(n=201)
    dense = straight(n=2001)
    dense.t_us = np.arange(2001, dtype=np.int64) * 25_000
    assert kitti_drift(est, dense, max_dt_us=125_000).mean == pytest.approx(0, abs=1e-9)


def test_combine_reports_averages():
    a = kitti_drift(straight(scale=1.01), straight())
    b = kitti_drift(straight(scale=1.03), straight())
    c = combine_reports([a, b], "x", ["a", "b"])
    assert c.mean == pytest.approx(2.0, abs=0.02)
    assert set(c.sequences) == {"a", "b"}
    assert c.to_dict()["mode"] == "x"
