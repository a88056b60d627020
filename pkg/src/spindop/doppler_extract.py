"""Radial velocities from consecutive up/down azimuth pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radar_core import ChirpSign, MalformedScanError, RadarConfig, RadarScan
from .signal_dsp import (
    DEFAULT_MIN_CONFIDENCE,
    FilterParams,
    default_max_lag,
    filter_azimuths,
    lags_from_spectra,
    row_spectra,
)

U_MAX = 35.0


@dataclass(frozen=True)
class ExtractParams:
    filter: FilterParams = FilterParams()
    min_confidence: float = DEFAULT_MIN_CONFIDENCE
    u_max: float = U_MAX
    max_lag: int | None = None

    def lag_window(self, config: RadarConfig) -> int:
        if self.max_lag is not None:
            return self.max_lag
        return default_max_lag(config.beta, config.bin_resolution, self.u_max)


@dataclass(frozen=True)
class RadialVelocityMeasurement:
    u: float
    angle: float
    timestamp: float
    pair_index: float
    confidence: float
    valid: bool


@dataclass
class RadialVelocities:
    """The N-1 pair measurements of one scan as parallel arrays."""

    u: np.ndarray
    angle: np.ndarray
    timestamp: np.ndarray
    pair_index: np.ndarray
    confidence: np.ndarray
    valid: np.ndarray
    scan_id: int = 0

    def __len__(self):
        return len(self.u)

    def __getitem__(self, j) -> RadialVelocityMeasurement:
        return RadialVelocityMeasurement(float(self.u[j]), float(self.angle[j]),
                                         float(self.timestamp[j]), float(self.pair_index[j]),
                                         float(self.confidence[j]), bool(self.valid[j]))

    def __iter__(self):
        return (self[j] for j in range(len(self)))

    @classmethod
    def from_measurements(cls, ms, scan_id: int = 0) -> "RadialVelocities":
        ms = list(ms)
        return cls(np.array([m.u for m in ms]), np.array([m.angle for m in ms]),
                   np.array([m.timestamp for m in ms]), np.array([m.pair_index for m in ms]),
                   np.array([m.confidence for m in ms]), np.array([m.valid for m in ms], bool),
                   scan_id)

    @classmethod
    def synthetic(cls, u, angle, valid=None) -> "RadialVelocities":
        """Bare measurement set, mainly for estimator tests."""
        u = np.asarray(u, float)
        n = len(u)
        return cls(u, np.asarray(angle, float), np.zeros(n), np.arange(n) + 0.5,
                   np.ones(n), np.ones(n, bool) if valid is None else np.asarray(valid, bool))


def pair_sign_convention(first_chirp, lag, config: RadarConfig):
    """Doppler range shift (m) from the lag of the second azimuth against the first.

    The down-chirp return sits ``2 * shift`` below the up-chirp return, so for
    an (up, down) pair the shift is ``-lag * res / 2`` and for (down, up) it is
    ``+lag * res / 2``. Both orderings give the same shift for the same motion.
    """
    sign = -np.asarray(first_chirp, dtype=float)
    return sign * np.asarray(lag, dtype=float) * config.bin_resolution / 2.0


def _mean_angle(a, b):
    # mean along the short arc; stays between the two parent angles
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    d = np.mod(b - a + np.pi, 2 * np.pi) - np.pi
    return np.mod(a + 0.5 * d, 2 * np.pi)


def _check_alternating(chirps, scan_id=0):
    bad = np.nonzero(np.asarray(chirps[1:]) == np.asarray(chirps[:-1]))[0]
    if len(bad):
        raise MalformedScanError(f"scan {scan_id}: chirps do not alternate at azimuth {bad[0] + 1}")


def _measurements(lag, peak, valid, chirp_a, angle_a, angle_b, ts_a, ts_b, first_index,
                  config: RadarConfig, params: ExtractParams) -> RadialVelocities:
    shift = pair_sign_convention(chirp_a, lag, config)
    u = shift / config.beta
    valid = valid & (np.abs(u) <= params.u_max)
    return RadialVelocities(
        u=u,
        angle=_mean_angle(angle_a, angle_b),
        timestamp=0.5 * (np.asarray(ts_a, dtype=float) + np.asarray(ts_b, dtype=float)),
        pair_index=np.asarray(first_index, dtype=float) + 0.5,
        confidence=np.clip(peak, 0.0, 1.0),
        valid=valid,
    )


def extract_radial_velocities(scan: RadarScan, params: ExtractParams = ExtractParams(),
                              config: RadarConfig | None = None,
                              filtered: np.ndarray | None = None) -> RadialVelocities:
    """All N-1 consecutive-pair radial velocities of a scan.

    Invalid pairs keep their slot and are flagged, so the output length is
    always ``N - 1``. ``filtered`` may carry the already filtered
    intensities to avoid doing that work twice.
    """
    config = config or scan.config
    _check_alternating(scan.chirps, scan.scan_id)
    if filtered is None:
        filtered = filter_azimuths(scan.intensities, params.filter)
    max_lag = params.lag_window(config)
    f, norm, nfft = row_spectra(filtered, max_lag)
    lag, peak, valid = lags_from_spectra(f[:-1], f[1:], norm[:-1], norm[1:], nfft, max_lag,
                                         params.min_confidence)
    out = _measurements(lag, peak, valid, scan.chirps[:-1], scan.angles[:-1],
                        scan.angles[1:], scan.timestamps[:-1], scan.timestamps[1:],
                        np.arange(len(scan) - 1), config, params)
    out.scan_id = scan.scan_id
    return out


class StreamingExtractor:
    """Produces a measurement as soon as each new azimuth completes a pair.

    Only the previous azimuth is held in memory.

    >>> ex = StreamingExtractor(config)            # doctest: +SKIP
    >>> for az in scan: m = ex.push(az)            # doctest: +SKIP
    """

    def __init__(self, config: RadarConfig, params: ExtractParams = ExtractParams()):
        self.config = config
        self.params = params
        self._prev = None

    def reset(self):
        self._prev = None

    def push(self, azimuth) -> RadialVelocityMeasurement | None:
        filtered = filter_azimuths(np.asarray(azimuth.intensity)[None, :], self.params.filter)
        max_lag = self.params.lag_window(self.config)
        spec = row_spectra(filtered, max_lag)
        prev, self._prev = self._prev, (azimuth, spec)
        if prev is None:
            return None
        pa, (fa, na, nfft) = prev
        if ChirpSign(pa.chirp) == ChirpSign(azimuth.chirp):
            raise MalformedScanError(f"chirps do not alternate at azimuth {azimuth.index}")
        lag, peak, valid = lags_from_spectra(fa, spec[0], na, spec[1], nfft, max_lag,
                                             self.params.min_confidence)
        m = _measurements(lag, peak, valid, [pa.chirp], [pa.angle], [azimuth.angle],
                          [pa.timestamp], [azimuth.timestamp], [pa.index], self.config,
                          self.params)
        return m[0]


def extract_streaming(scan: RadarScan, params: ExtractParams = ExtractParams()) -> RadialVelocities:
    ex = StreamingExtractor(scan.config, params)
    ms = [m for m in (ex.push(az) for az in scan) if m is not None]
    return RadialVelocities.from_measurements(ms, scan.scan_id)
