"""Radar physics for spinning FMCW radar with alternating chirp modulation.

Sign convention used throughout the package: a radial velocity ``u`` is the
range rate of a target, positive when it recedes from the sensor. Angles are
measured counter-clockwise from the vehicle forward axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class InvalidConfigError(ValueError):
    pass


class MalformedScanError(ValueError):
    pass


class ChirpSign(enum.IntEnum):
    UP = 1
    DOWN = -1

    @classmethod
    def for_index(cls, index: int) -> "ChirpSign":
        # even azimuths are up chirps
        return cls.UP if index % 2 == 0 else cls.DOWN


def beta_from_modulation(carrier_frequency: float, modulation_slope: float) -> float:
    """Return ``beta = f_t / |df/dt|`` in seconds.

    The chirp direction is carried by :class:`ChirpSign`, so beta is always
    positive.
    """
    if modulation_slope == 0:
        raise InvalidConfigError("modulation slope must be non-zero")
    if carrier_frequency <= 0:
        raise InvalidConfigError("carrier frequency must be positive")
    return carrier_frequency / abs(modulation_slope)


def doppler_shift_from_velocity(u, beta: float):
    """Doppler-induced range shift (m) for radial velocity ``u`` (m/s)."""
    return beta * u


def velocity_from_doppler_shift(shift, beta: float):
    """Radial velocity (m/s) for a Doppler range shift (m)."""
    return shift / beta


class MeasuredRange(NamedTuple):
    range: float | np.ndarray
    out_of_band: bool | np.ndarray


def measured_range(true_range, shift, chirp) -> MeasuredRange:
    """Apparent range of a target at ``true_range`` with Doppler shift ``shift``.

    Up chirps read long by ``shift``, down chirps read short. ``chirp`` may be
    a :class:`ChirpSign` or an array of +1/-1. Results below zero are clamped
    and flagged out of band.
    """
    raw = np.asarray(true_range, dtype=float) + np.asarray(chirp, dtype=float) * shift
    out = raw < 0
    r = np.where(out, 0.0, raw)
    if r.ndim == 0:
        return MeasuredRange(float(r), bool(out))
    return MeasuredRange(r, out)


def radial_projection(v, theta):
    """Range rate of a static target at bearing ``theta`` seen from a platform
    moving with body velocity ``v = (v_x, v_y)``.
    """
    vx, vy = v[0], v[1]
    return -(vx * np.cos(theta) + vy * np.sin(theta))


@dataclass(frozen=True)
class RadarConfig:
    carrier_frequency: float = 76.5e9
    modulation_slope: float = 76.5e9 / 0.05
    bin_resolution: float = 0.043
    num_bins: int = 2000
    num_azimuths: int = 400
    rotation_rate: float = 4.0
    beamwidth_3db: float = math.radians(1.8)

    def __post_init__(self):
        beta_from_modulation(self.carrier_frequency, self.modulation_slope)
        if self.bin_resolution <= 0:
            raise InvalidConfigError("bin_resolution must be positive")
        if self.num_azimuths < 4 or self.num_azimuths % 2:
            raise InvalidConfigError("num_azimuths must be even and >= 4")
        if self.num_bins < 1:
            raise InvalidConfigError("num_bins must be positive")
        if self.rotation_rate <= 0:
            raise InvalidConfigError("rotation_rate must be positive")
        if self.beamwidth_3db <= 0:
            raise InvalidConfigError("beamwidth_3db must be positive")

    @classmethod
    def from_beta(cls, beta: float, carrier_frequency: float = 76.5e9, **kwargs) -> "RadarConfig":
        if beta <= 0:
            raise InvalidConfigError("beta must be positive")
        return cls(carrier_frequency=carrier_frequency,
                   modulation_slope=carrier_frequency / beta, **kwargs)

    @property
    def beta(self) -> float:
        return beta_from_modulation(self.carrier_frequency, self.modulation_slope)

    @property
    def speed_of_light(self) -> float:
        return SPEED_OF_LIGHT

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def max_range(self) -> float:
        return self.num_bins * self.bin_resolution

    @property
    def period_us(self) -> int:
        return int(round(1e6 / self.rotation_rate))

    def azimuth_angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.num_azimuths) / self.num_azimuths

    def azimuth_offsets_us(self) -> np.ndarray:
        """Timestamp offset of each azimuth from the start of its rotation."""
        k = np.arange(self.num_azimuths, dtype=np.int64)
        return (k * self.period_us) // self.num_azimuths

    def chirps(self) -> np.ndarray:
        return np.where(np.arange(self.num_azimuths) % 2 == 0, 1, -1).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "carrier_frequency": self.carrier_frequency,
            "modulation_slope": self.modulation_slope,
            "beta": self.beta,
            "bin_resolution": self.bin_resolution,
            "num_bins": self.num_bins,
            "num_azimuths": self.num_azimuths,
            "rotation_rate": self.rotation_rate,
            "beamwidth_3db": self.beamwidth_3db,
            "wavelength": self.wavelength,
            "speed_of_light": SPEED_OF_LIGHT,
        }


@dataclass(frozen=True)
class AzimuthReturn:
    index: int
    angle: float
    timestamp: int
    chirp: ChirpSign
    intensity: np.ndarray


@dataclass
class RadarScan:
    """One radar rotation stored as stacked arrays.

    ``intensities`` has shape ``(num_azimuths, num_bins)``; row ``k`` is the
    raw return of azimuth ``k``.
    """

    scan_id: int
    config: RadarConfig
    timestamps: np.ndarray
    angles: np.ndarray
    chirps: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.angles = np.asarray(self.angles, dtype=np.float64)
        self.chirps = np.asarray(self.chirps, dtype=np.int8)
        self.intensities = np.asarray(self.intensities)

    def __len__(self):
        return len(self.timestamps)

    @property
    def mid_timestamp(self) -> int:
        # mean of first and last azimuth stamps, floored to whole microseconds
        return int((int(self.timestamps[0]) + int(self.timestamps[-1])) // 2)

    def azimuth(self, k: int) -> AzimuthReturn:
        return AzimuthReturn(k, float(self.angles[k]), int(self.timestamps[k]),
                             ChirpSign(int(self.chirps[k])), self.intensities[k])

    @property
    def azimuths(self) -> list[AzimuthReturn]:
        return list(self)

    def __iter__(self) -> Iterator[AzimuthReturn]:
        for k in range(len(self)):
            yield self.azimuth(k)

    def validate(self) -> "RadarScan":
        n = self.config.num_azimuths
        if self.intensities.shape != (n, self.config.num_bins):
            raise MalformedScanError(
                f"scan {self.scan_id}: intensity shape {self.intensities.shape}, "
                f"expected {(n, self.config.num_bins)}")
        if len(self.timestamps) != n or len(self.angles) != n or len(self.chirps) != n:
            raise MalformedScanError(f"scan {self.scan_id}: expected {n} azimuths")
        if np.any(np.diff(self.timestamps) <= 0):
            raise MalformedScanError(f"scan {self.scan_id}: timestamps not increasing")
        bad = np.nonzero(self.chirps[1:] == self.chirps[:-1])[0]
        if len(bad):
            raise MalformedScanError(
                f"scan {self.scan_id}: chirps do not alternate at azimuth {bad[0] + 1}")
        if not np.all(np.isin(self.chirps, (1, -1))):
            raise MalformedScanError(f"scan {self.scan_id}: invalid chirp value")
        return self
