"""Azimuth filtering and cross-correlation lag estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy.ndimage import gaussian_filter1d

DEFAULT_MIN_CONFIDENCE = 0.2


@dataclass(frozen=True)
class FilterParams:
    gaussian_sigma: float = 2.0  # bins; about the width of a single return
    noise_floor_clip: float = 0.0
    reweight_enabled: bool = True

    def __post_init__(self):
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be positive")


@dataclass(frozen=True)
class LagEstimate:
    lag: float
    peak_correlation: float
    valid: bool


def estimate_noise_sigma(signal) -> tuple[float, bool]:
    """Noise scale from the non-positive samples of a mean-subtracted signal.

    Assumes noise symmetric about zero, so the negative half carries the
    second moment. Returns ``(sigma, degenerate)``; ``degenerate`` is set when
    there are no non-positive samples or they are all exactly zero.
    """
    y = np.asarray(signal, dtype=float)
    neg = y[y <= 0]
    if neg.size == 0:
        return 0.0, True
    sigma = math.sqrt(float(np.mean(neg * neg)))
    return sigma, sigma == 0.0


def _noise_sigma_rows(y: np.ndarray) -> np.ndarray:
    neg = np.where(y <= 0, y, 0.0)
    count = np.count_nonzero(y <= 0, axis=-1)
    ssq = np.einsum("...i,...i->...", neg, neg)
    with np.errstate(invalid="ignore", divide="ignore"):
        sigma = np.sqrt(np.where(count > 0, ssq / np.maximum(count, 1), 0.0))
    return sigma


def filter_azimuths(signals, params: FilterParams = FilterParams()) -> np.ndarray:
    """Filter the rows of ``signals`` (last axis = range bins).

    Steps per row: subtract the mean, estimate the noise scale from the
    negative samples, Gaussian-smooth, then weight each bin by
    ``1 - exp(-s^2 / (2 sigma^2))`` where ``s`` is the unsmoothed
    mean-subtracted sample. Rows with no usable noise estimate are left
    unweighted.
    """
    x = np.asarray(signals, dtype=np.float64)
    if params.noise_floor_clip:
        x = np.maximum(x, params.noise_floor_clip)
    s = x - x.mean(axis=-1, keepdims=True)
    smooth = gaussian_filter1d(s, params.gaussian_sigma, axis=-1, mode="constant")
    if not params.reweight_enabled:
        return smooth
    sq = s * s
    neg = s <= 0
    count = np.count_nonzero(neg, axis=-1)
    var = np.einsum("...i,...i->...", sq, neg.astype(np.float64)) / np.maximum(count, 1)
    degenerate = var == 0
    # w = 1 - exp(-s^2 / (2 sigma^2)), built in place
    sq *= (-0.5 / np.where(degenerate, 1.0, var))[..., None]
    np.expm1(sq, out=sq)
    np.negative(sq, out=sq)
    if degenerate.any():
        sq[degenerate] = 1.0
    smooth *= sq
    return smooth


def filter_azimuth(signal, params: FilterParams = FilterParams()) -> np.ndarray:
    return filter_azimuths(np.asarray(signal, dtype=np.float64)[None, :], params)[0]


def correlation_direct(a, b, max_lag: int) -> np.ndarray:
    """Brute-force ``c[l] = sum_i a[i] * b[i + l]`` for ``l`` in ``[-max_lag, max_lag]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    out = np.zeros(2 * max_lag + 1)
    for j, lag in enumerate(range(-max_lag, max_lag + 1)):
        if lag >= 0:
            out[j] = np.dot(a[: n - lag], b[lag:])
        else:
            out[j] = np.dot(a[-lag:], b[: n + lag])
    return out


def _fft_size(n: int, max_lag: int) -> int:
    # lags beyond max_lag may alias; the ones we keep cannot
    return sp_fft.next_fast_len(n + max_lag, real=True)


def correlation_fft(a, b, max_lag: int) -> np.ndarray:
    """Same quantity as :func:`correlation_direct`, via the FFT.

    Works on stacked rows; the last axis is the signal axis.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[-1]
    nfft = _fft_size(n, max_lag)
    spec = np.conj(sp_fft.rfft(a, nfft, axis=-1)) * sp_fft.rfft(b, nfft, axis=-1)
    full = sp_fft.irfft(spec, nfft, axis=-1)
    # negative lags wrap to the end of the buffer
    return np.concatenate([full[..., nfft - max_lag:], full[..., : max_lag + 1]], axis=-1)


def _normalize(corr: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(norm[..., None] > 0, corr / np.where(norm > 0, norm, 1.0)[..., None], 0.0)


def lags_from_correlation(ncorr: np.ndarray, max_lag: int,
                          min_confidence: float = DEFAULT_MIN_CONFIDENCE):
    """Peak pick with parabolic sub-bin refinement on normalized correlations.

    Returns arrays ``(lag, peak, valid)`` over the leading axes.
    """
    ncorr = np.atleast_2d(ncorr)
    idx = np.argmax(ncorr, axis=-1)
    rows = np.arange(ncorr.shape[0])
    peak = ncorr[rows, idx]
    interior = (idx > 0) & (idx < 2 * max_lag)
    il = np.clip(idx - 1, 0, 2 * max_lag)
    ir = np.clip(idx + 1, 0, 2 * max_lag)
    cm, cp = ncorr[rows, il], ncorr[rows, ir]
    denom = cm - 2.0 * peak + cp
    with np.errstate(invalid="ignore", divide="ignore"):
        delta = np.where(interior & (denom < 0), 0.5 * (cm - cp) / np.where(denom < 0, denom, -1.0), 0.0)
    lag = idx - max_lag + delta
    valid = interior & (peak >= min_confidence) & np.isfinite(lag)
    return lag, peak, valid


def cross_correlate_lag(a, b, max_lag: int,
                        min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> LagEstimate:
    """Shift of ``b`` relative to ``a`` in bins.

    A positive lag means the content of ``b`` sits at higher bins than in
    ``a``. The estimate is invalid for flat inputs, peaks on the search
    boundary, or a normalized peak below ``min_confidence``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D and of equal length")
    if not 0 < max_lag < len(a) / 2:
        raise ValueError("max_lag must be in (0, len/2)")
    if not np.any(a) or not np.any(b):
        return LagEstimate(0.0, 0.0, False)
    ncorr = _normalize(correlation_fft(a, b, max_lag), a, b)
    lag, peak, valid = lags_from_correlation(ncorr[None], max_lag, min_confidence)
    return LagEstimate(float(lag[0]), float(peak[0]), bool(valid[0]))


def cross_correlate_rows(a: np.ndarray, b: np.ndarray, max_lag: int,
                         min_confidence: float = DEFAULT_MIN_CONFIDENCE):
    """Row-wise :func:`cross_correlate_lag` returning ``(lag, peak, valid)`` arrays."""
    ncorr = _normalize(correlation_fft(a, b, max_lag), a, b)
    return lags_from_correlation(ncorr, max_lag, min_confidence)


def row_spectra(rows: np.ndarray, max_lag: int):
    """Forward transforms and norms of filtered rows, for reuse across pairs."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    nfft = _fft_size(rows.shape[-1], max_lag)
    return sp_fft.rfft(rows, nfft, axis=-1), np.sqrt(np.einsum("ij,ij->i", rows, rows)), nfft


def lags_from_spectra(fa, fb, norm_a, norm_b, nfft: int, max_lag: int,
                      min_confidence: float = DEFAULT_MIN_CONFIDENCE):
    """Pairwise lags of rows ``b`` against rows ``a`` given their spectra."""
    full = sp_fft.irfft(np.conj(fa) * fb, nfft, axis=-1)
    corr = np.concatenate([full[:, nfft - max_lag:], full[:, : max_lag + 1]], axis=-1)
    pair = norm_a * norm_b
    with np.errstate(invalid="ignore", divide="ignore"):
        ncorr = np.where(pair[:, None] > 0, corr / np.where(pair > 0, pair, 1.0)[:, None], 0.0)
    return lags_from_correlation(ncorr, max_lag, min_confidence)


def consecutive_lags(rows: np.ndarray, max_lag: int,
                     min_confidence: float = DEFAULT_MIN_CONFIDENCE):
    """Lags of every row against the next one; each row is transformed once."""
    f, norm, nfft = row_spectra(rows, max_lag)
    return lags_from_spectra(f[:-1], f[1:], norm[:-1], norm[1:], nfft, max_lag, min_confidence)


def default_max_lag(beta: float, bin_resolution: float, u_max: float = 35.0) -> int:
    return int(math.ceil(2.0 * beta * u_max / bin_resolution))
