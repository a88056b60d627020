import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spindop.doppler_extract import RadialVelocities
from spindop.ego_estimator import (
    DegenerateGeometryError,
    EstimatorParams,
    GateExhaustedError,
    IrlsParams,
    NoEstimateError,
    RansacParams,
    cauchy_irls_velocity,
    estimate_from_measurements,
    estimate_scan_velocity,
    least_squares_velocity,
    ransac_velocity,
)
from spindop.radar_core import RadarConfig
from spindop.scan_sim import TrajectorySpec, builtin_scene, simulate_scan


def radial(v, angle):
    angle = np.asarray(angle)
    return -(v[0] * np.cos(angle) + v[1] * np.sin(angle))


def adversarial_set(seed, truth=(15.0, 0.0), wrong_frac=0.6, n=399, noise=0.2):
    rng = np.random.default_rng(seed)
    angle = np.sort(rng.uniform(0, 2 * np.pi, n))
    d = rng.normal(size=2)
    wrong = np.asarray(truth) + 8.0 * d / np.linalg.norm(d)
    u = radial(truth, angle) + rng.normal(0, noise, n)
    bad = rng.permutation(n)[: int(wrong_frac * n)]
    u[bad] = radial(wrong, angle[bad]) + rng.normal(0, noise, len(bad))
    return RadialVelocities.synthetic(u, angle), np.asarray(truth), wrong


def outlier_set(seed, truth=(20.0, 0.0), frac=0.3, n=399):
    rng = np.random.default_rng(seed)
    angle = rng.uniform(0, 2 * np.pi, n)
    u = radial(truth, angle) + rng.normal(0, 0.3, n)
    bad = rng.permutation(n)[: int(frac * n)]
    u[bad] = 15.0
    return RadialVelocities.synthetic(u, angle)


def test_ransac_noiseless_exact():
    angle = np.linspace(0, 2 * np.pi, 399, endpoint=False)
    U = RadialVelocities.synthetic(radial((10, 0), angle), angle)
    v, mask = ransac_velocity(U)
    assert np.allclose(v, (10, 0), atol=1e-9)
    assert mask.all()


def test_ransac_ignores_invalid_slots():
    angle = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    u = radial((3, 4), angle)
    valid = np.ones(100, bool)
    valid[::2] = False
    u[~valid] = 99.0
    v, mask = ransac_velocity(RadialVelocities.synthetic(u, angle, valid))
    assert np.allclose(v, (3, 4), atol=1e-9)
    assert not mask[~valid].any()


def test_ransac_needs_two_valid():
    U = RadialVelocities.synthetic([1.0, 2.0], [0.0, 1.0], [True, False])
    with pytest.raises(NoEstimateError):
        ransac_velocity(U)


@pytest.mark.parametrize("seed", range(10))
def test_prior_gate_resists_capture(seed):
    U, truth, wrong = adversarial_set(seed)
    p = RansacParams(rng_seed=seed)
    v, _ = ransac_velocity(U, prev_v=truth, params=p)
    assert np.linalg.norm(v - truth) <= p.prior_gate
    assert np.linalg.norm(v - truth) < np.linalg.norm(v - wrong)


@pytest.mark.parametrize("seed", range(10))
def test_without_prior_majority_wins(seed):
    U, truth, wrong = adversarial_set(seed)
    v, _ = ransac_velocity(U, params=RansacParams(rng_seed=seed))
    assert np.linalg.norm(v - wrong) < 1.0


def test_gate_exhausted():
    angle = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    U = RadialVelocities.synthetic(radial((20, 0), angle), angle)
    with pytest.raises(GateExhaustedError):
        ransac_velocity(U, prev_v=(0, 0))


def test_gate_exhausted_falls_back_to_prev():
    angle = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    U = RadialVelocities.synthetic(radial((20, 0), angle), angle)
    out = estimate_from_measurements(U, prev=(1.0, 2.0), timestamp=123)
    assert out.fallback
    assert np.allclose(out.v, (1, 2))
    assert np.allclose(out.covariance, 10 * np.eye(2))
    assert out.timestamp == 123


def test_irls_noiseless_fixed_point():
    angle = np.linspace(0.1, 6.0, 80)
    U = RadialVelocities.synthetic(radial((5, -2), angle), angle)
    out = cauchy_irls_velocity(U, init_v=(0, 0))
    assert np.allclose(out.v, (5, -2), atol=1e-9)
    assert np.all(np.linalg.eigvalsh(out.covariance) > 0)


def test_irls_cauchy_beats_ls_with_outliers():
    cauchy_err, ls_err = [], []
    for seed in range(100):
        U = outlier_set(seed)
        ls = least_squares_velocity(U)
        ca = cauchy_irls_velocity(U, init_v=ls.v)
        ls_err.append(np.linalg.norm(ls.v - (20, 0)))
        cauchy_err.append(np.linalg.norm(ca.v - (20, 0)))
    assert np.median(cauchy_err) <= 0.3
    assert np.median(ls_err) >= 1.0


def test_irls_degenerate_geometry():
    angle = np.array([0.0, np.pi] * 20)
    U = RadialVelocities.synthetic(radial((4, 7), angle), angle)
    with pytest.raises(DegenerateGeometryError) as exc:
        cauchy_irls_velocity(U, init_v=(0, 0))
    d = exc.value.direction
    assert abs(abs(d[0]) - 1.0) < 1e-9
    assert abs(exc.value.component * d[0]) == pytest.approx(4.0)


def test_ls_mode_matches_lstsq():
    rng = np.random.default_rng(2)
    angle = rng.uniform(0, 2 * np.pi, 60)
    u = radial((2, 1), angle) + rng.normal(0, 0.5, 60)
    A = -np.column_stack([np.cos(angle), np.sin(angle)])
    ref = np.linalg.lstsq(A, u, rcond=None)[0]
    out = cauchy_irls_velocity(RadialVelocities.synthetic(u, angle), (0, 0), IrlsParams(loss="ls"))
    assert np.allclose(out.v, ref, atol=1e-10)


def test_confidence_scaling_invariance():
    U, truth, _ = adversarial_set(4, wrong_frac=0.2)
    a = estimate_from_measurements(U)
    U.confidence = U.confidence * 0.37
    b = estimate_from_measurements(U)
    assert np.array_equal(a.v, b.v)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prior_gate_bound_property(seed):
    rng = np.random.default_rng(seed)
    n = 200
    angle = rng.uniform(0, 2 * np.pi, n)
    u = rng.uniform(-30, 30, n)
    prev = rng.uniform(-20, 20, 2)
    params = EstimatorParams(ransac=RansacParams(min_inliers=2, rng_seed=seed))
    try:
        out = estimate_from_measurements(RadialVelocities.synthetic(u, angle), prev, params)
    except DegenerateGeometryError:
        return
    bound = params.ransac.prior_gate + 3 * params.ransac.inlier_threshold
    assert np.linalg.norm(out.v - prev) <= bound
    assert np.all(np.linalg.eigvalsh(out.covariance) > 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-25, 25), st.floats(-25, 25), st.integers(3, 50))
def test_noiseless_recovery_property(vx, vy, n):
    angle = np.linspace(0, 2 * np.pi, n, endpoint=False) + 0.3
    U = RadialVelocities.synthetic(radial((vx, vy), angle), angle)
    params = EstimatorParams(ransac=RansacParams(min_inliers=2))
    out = estimate_from_measurements(U, None, params)
    assert np.allclose(out.v, (vx, vy), atol=1e-9)


def _scan(traj, seed=0):
    cfg = RadarConfig()
    return simulate_scan(builtin_scene("suburbs"), traj, 0, cfg, seed, 0)[0]


def test_suburbs_scan_constant_velocity():
    scan = _scan(TrajectorySpec(knots=[(0, 15, 0, 0), (10, 15, 0, 0)]))
    out = estimate_scan_velocity(scan)
    assert np.all(np.abs(out.v - (15, 0)) <= 0.2)
    assert out.timestamp == scan.mid_timestamp
    assert out.inlier_mask.shape == (399,)


def test_stationary_scan():
    scan = _scan(TrajectorySpec(knots=[(0, 0, 0, 0), (10, 0, 0, 0)]), seed=4)
    out = estimate_scan_velocity(scan)
    assert np.linalg.norm(out.v) <= 0.1


def test_constant_acceleration_midpoint():
    traj = TrajectorySpec(knots=[(0, 10, 0, 0), (10, 30, 0, 0)])
    scan = _scan(traj, seed=9)
    out = estimate_scan_velocity(scan)
    vx, vy, _ = traj.velocity(scan.mid_timestamp * 1e-6)
    assert np.linalg.norm(out.v - (vx, vy)) <= 0.3
