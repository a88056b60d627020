"""Per-scan ego-velocity from radial velocities: RANSAC with a prior gate, then Cauchy IRLS."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .doppler_extract import ExtractParams, RadialVelocities, extract_radial_velocities
from .radar_core import RadarScan

log = logging.getLogger(__name__)

MIN_SIN_SEPARATION = 0.1
FALLBACK_COV_INFLATION = 10.0
# keeps the reported covariance PD when residuals vanish
VARIANCE_FLOOR = 1e-6


class NoEstimateError(RuntimeError):
    pass


class GateExhaustedError(RuntimeError):
    pass


class DegenerateGeometryError(RuntimeError):
    """All bearings are (anti)parallel; only one velocity component is observable."""

    def __init__(self, msg, direction, component):
        super().__init__(msg)
        self.direction = np.asarray(direction, dtype=float)
        self.component = float(component)


@dataclass(frozen=True)
class RansacParams:
    inlier_threshold: float = 1.0
    max_iterations: int = 200
    prior_gate: float = 6.0
    min_inliers: int = 20
    rng_seed: int = 0
    # score by the weaker of the two pair orderings, see ransac_velocity
    balance_orderings: bool = True

    def __post_init__(self):
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if self.prior_gate <= 0:
            raise ValueError("prior_gate must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class IrlsParams:
    cauchy_scale: float = 0.5
    tol: float = 1e-6
    max_iterations: int = 50
    loss: str = "cauchy"  # or "ls"

    def __post_init__(self):
        if self.loss not in ("cauchy", "ls"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.cauchy_scale <= 0:
            raise ValueError("cauchy_scale must be positive")


@dataclass
class VelocityPseudoMeasurement:
    v: np.ndarray
    covariance: np.ndarray
    timestamp: int = 0
    inlier_count: int = 0
    inlier_mask: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))
    fallback: bool = False

    @property
    def vx(self):
        return float(self.v[0])

    @property
    def vy(self):
        return float(self.v[1])


def design_matrix(angle) -> np.ndarray:
    angle = np.asarray(angle, dtype=float)
    return -np.column_stack([np.cos(angle), np.sin(angle)])


def residuals(v, u, angle) -> np.ndarray:
    """e_i = u_i + v_x cos(theta_i) + v_y sin(theta_i)."""
    return np.asarray(u, dtype=float) - design_matrix(angle) @ np.asarray(v, dtype=float)


def _as_arrays(U):
    if isinstance(U, RadialVelocities):
        return np.asarray(U.u, float), np.asarray(U.angle, float), np.asarray(U.valid, bool)
    u, angle = (np.asarray(a, float) for a in U[:2])
    valid = np.asarray(U[2], bool) if len(U) > 2 else np.ones(len(u), bool)
    return u, angle, valid


def _pair_candidates(u, angle, ia, ib):
    """Exact 2x2 solves for many index pairs at once."""
    ca, sa, cb, sb = np.cos(angle[ia]), np.sin(angle[ia]), np.cos(angle[ib]), np.sin(angle[ib])
    det = ca * sb - sa * cb
    # -[ca sa; cb sb] v = [ua; ub]
    vx = -(sb * u[ia] - sa * u[ib]) / det
    vy = -(-cb * u[ia] + ca * u[ib]) / det
    return np.column_stack([vx, vy]), det


def _ordering(U, n):
    """0 for pairs that start on an even azimuth, 1 otherwise."""
    if isinstance(U, RadialVelocities):
        return np.floor(np.asarray(U.pair_index, float)).astype(np.int64) % 2
    return np.arange(n) % 2


def ransac_velocity(U, prev_v=None, params: RansacParams = RansacParams()):
    """Best 2-sample candidate and its inlier mask over all N-1 slots.

    A Doppler shift reads the same from (up, down) and (down, up) pairs,
    while a range change between neighbouring beams (an oblique wall) flips
    sign with the ordering and mimics a velocity offset. With
    ``balance_orderings`` a candidate is scored by twice the inlier count of
    its weaker ordering, so support from one ordering alone cannot win.
    """
    u, angle, valid = _as_arrays(U)
    idx = np.flatnonzero(valid & np.isfinite(u))
    if len(idx) < 2:
        raise NoEstimateError(f"need >= 2 valid measurements, got {len(idx)}")
    rng = np.random.default_rng(params.rng_seed)
    # oversample pairs so ill-conditioned draws can be dropped without a loop
    m = 4 * params.max_iterations
    first = rng.integers(0, len(idx), size=m)
    second = (first + rng.integers(1, len(idx), size=m)) % len(idx)  # never the same slot
    ia, ib = idx[first], idx[second]
    ok = np.abs(np.sin(angle[ia] - angle[ib])) >= MIN_SIN_SEPARATION
    ia, ib = ia[ok][: params.max_iterations], ib[ok][: params.max_iterations]
    if len(ia) == 0:
        raise NoEstimateError("no well-conditioned sample pair")
    cand, _ = _pair_candidates(u, angle, ia, ib)
    if prev_v is not None:
        keep = np.linalg.norm(cand - np.asarray(prev_v, float), axis=1) <= params.prior_gate
        cand = cand[keep]
        if len(cand) == 0:
            raise GateExhaustedError("every candidate deviates from prev_v by more than the gate")
    A = design_matrix(angle[idx])
    res = u[idx][None, :] - cand @ A.T
    inl = np.abs(res) <= params.inlier_threshold
    counts = inl.sum(axis=1)
    rms = np.sqrt(np.sum(np.where(inl, res * res, 0.0), axis=1) / np.maximum(counts, 1))
    score = counts
    if params.balance_orderings:
        odd = _ordering(U, len(u))[idx] == 1
        n_odd = inl[:, odd].sum(axis=1)
        score = 2 * np.minimum(n_odd, counts - n_odd)
    best = np.lexsort((rms, -counts, -score))[0]
    mask = np.zeros(len(u), bool)
    mask[idx[inl[best]]] = True
    return cand[best], mask


def _check_geometry(angle):
    A = design_matrix(angle)
    sv = np.linalg.svd(A, compute_uv=False)
    return A, sv


def cauchy_irls_velocity(U, init_v, params: IrlsParams = IrlsParams(),
                         timestamp: int = 0) -> VelocityPseudoMeasurement:
    """Robust fit over the valid entries of ``U`` starting from ``init_v``."""
    u, angle, valid = _as_arrays(U)
    sel = valid & np.isfinite(u)
    us, th = u[sel], angle[sel]
    if len(us) < 2:
        raise NoEstimateError("need >= 2 measurements")
    A, sv = _check_geometry(th)
    if sv[-1] < 1e-6 * max(sv[0], 1e-300) * np.sqrt(len(us)):
        _, _, vt = np.linalg.svd(A)
        d = vt[0]
        comp = float(np.linalg.lstsq(A @ d[:, None], us, rcond=None)[0][0])
        raise DegenerateGeometryError("bearings are collinear; one velocity component unobservable",
                                      d, comp)
    v = np.asarray(init_v, dtype=float).copy()
    w = np.ones(len(us))
    for _ in range(params.max_iterations):
        e = us - A @ v
        if params.loss == "cauchy":
            w = 1.0 / (1.0 + (e / params.cauchy_scale) ** 2)
        AtW = A.T * w
        v_new = np.linalg.solve(AtW @ A, AtW @ us)
        step = np.linalg.norm(v_new - v)
        v = v_new
        if step < params.tol:
            break
    e = us - A @ v
    if params.loss == "cauchy":
        w = 1.0 / (1.0 + (e / params.cauchy_scale) ** 2)
    AtW = A.T * w
    dof = max(float(np.sum(w)) - 2.0, 1.0)
    s2 = max(float(np.sum(w * e * e)) / dof, VARIANCE_FLOOR)
    cov = np.linalg.inv(AtW @ A) * s2
    cov = 0.5 * (cov + cov.T)
    mask = np.zeros(len(u), bool)
    mask[np.flatnonzero(sel)] = True
    return VelocityPseudoMeasurement(v, cov, int(timestamp), int(sel.sum()), mask)


def least_squares_velocity(U, timestamp: int = 0) -> VelocityPseudoMeasurement:
    return cauchy_irls_velocity(U, np.zeros(2), IrlsParams(loss="ls"), timestamp)


@dataclass(frozen=True)
class EstimatorParams:
    extract: ExtractParams = ExtractParams()
    ransac: RansacParams = RansacParams()
    irls: IrlsParams = IrlsParams()


def fallback_measurement(prev, timestamp, n) -> VelocityPseudoMeasurement:
    """Hold the previous estimate with an inflated covariance."""
    if isinstance(prev, VelocityPseudoMeasurement):
        v, cov = prev.v.copy(), prev.covariance * FALLBACK_COV_INFLATION
    else:
        v, cov = np.asarray(prev, float).copy(), np.eye(2) * FALLBACK_COV_INFLATION
    return VelocityPseudoMeasurement(v, cov, int(timestamp), 0, np.zeros(n, bool), fallback=True)


def estimate_from_measurements(U: RadialVelocities, prev=None, params: EstimatorParams = EstimatorParams(),
                               timestamp: int = 0) -> VelocityPseudoMeasurement:
    prev_v = None
    if prev is not None:
        prev_v = prev.v if isinstance(prev, VelocityPseudoMeasurement) else np.asarray(prev, float)
    try:
        cand, mask = ransac_velocity(U, prev_v, params.ransac)
        if mask.sum() < params.ransac.min_inliers:
            raise GateExhaustedError(f"only {mask.sum()} inliers")
        inl = RadialVelocities(U.u, U.angle, U.timestamp, U.pair_index, U.confidence, mask, U.scan_id)
        out = cauchy_irls_velocity(inl, cand, params.irls, timestamp)
    except (GateExhaustedError, NoEstimateError, DegenerateGeometryError) as exc:
        if prev_v is None:
            raise
        log.warning("scan %s: %s; holding previous velocity", U.scan_id, exc)
        return fallback_measurement(prev if prev is not None else prev_v, timestamp, len(U))
    return out


def estimate_scan_velocity(scan: RadarScan, prev=None, params: EstimatorParams = EstimatorParams(),
                           filtered=None) -> VelocityPseudoMeasurement:
    """Full per-scan pipeline, stamped at the scan midpoint."""
    U = extract_radial_velocities(scan, params.extract, filtered=filtered)
    return estimate_from_measurements(U, prev, params, scan.mid_timestamp)
