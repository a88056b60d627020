"""On-disk formats: binary scan files, config text, ground truth, gyro, velocity and trajectory CSVs."""

from __future__ import annotations

import csv
import dataclasses
import os
import re
import struct
from pathlib import Path

import numpy as np

from .doppler_extract import RadialVelocities
from .ego_estimator import VelocityPseudoMeasurement
from .odometry import Trajectory
from .radar_core import RadarConfig, RadarScan
from .scan_sim import Dataset, GroundTruth

MAGIC = b"DRS1"
# magic, N, num_bins, scan index
HEADER = struct.Struct("<4sIII")
VELOCITY_SCHEMA = "spindop-velocities v1"
EGO_SCHEMA = "spindop-egovel v1"
TRAJECTORY_SCHEMA = "spindop-trajectory v1"
GT_FIELDS = ("t_us", "x", "y", "yaw", "vx", "vy", "omega")
SCAN_NAME = re.compile(r"scan_(.+)_(\d+)\.drs$")


class FormatError(ValueError):
    pass


def _record_dtype(num_bins: int) -> np.dtype:
    return np.dtype([("t", "<u8"), ("angle", "<f8"), ("chirp", "i1"), ("I", "<f4", (num_bins,))])


def scan_file_size(n: int, num_bins: int) -> int:
    return HEADER.size + n * _record_dtype(num_bins).itemsize


def _fmt(x) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# scans


def write_scan_file(path, scan: RadarScan) -> None:
    n, nb = scan.intensities.shape
    rec = np.empty(n, _record_dtype(nb))
    rec["t"] = scan.timestamps
    rec["angle"] = scan.angles
    rec["chirp"] = scan.chirps
    rec["I"] = scan.intensities
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, n, nb, scan.scan_id))
        f.write(rec.tobytes())


def read_scan_file(path, config: RadarConfig | None = None) -> RadarScan:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, n, nb, scan_id = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    dt = _record_dtype(nb)
    body = len(data) - HEADER.size
    if body < n * dt.itemsize:
        k = body // dt.itemsize
        raise FormatError(f"{path}: truncated at azimuth {k} (byte offset "
                          f"{HEADER.size + k * dt.itemsize}, {len(data)} bytes total)")
    if body > n * dt.itemsize:
        raise FormatError(f"{path}: {body - n * dt.itemsize} trailing bytes after azimuth {n - 1}")
    rec = np.frombuffer(data, dt, count=n, offset=HEADER.size)
    chirps = rec["chirp"].copy()
    bad = np.flatnonzero(~np.isin(chirps, (1, -1)))
    if len(bad) == 0:
        bad = np.flatnonzero(chirps[1:] == chirps[:-1]) + 1
    if len(bad):
        k = int(bad[0])
        raise FormatError(f"{path}: chirp does not alternate at azimuth {k} "
                          f"(byte offset {HEADER.size + k * dt.itemsize + 16})")
    if config is None:
        config = RadarConfig(num_bins=nb, num_azimuths=n)
    elif (config.num_azimuths, config.num_bins) != (n, nb):
        raise FormatError(f"{path}: shape {(n, nb)} does not match config "
                          f"{(config.num_azimuths, config.num_bins)}")
    return RadarScan(int(scan_id), config, rec["t"].astype(np.int64), rec["angle"].copy(), chirps,
                     rec["I"].copy())


# --------------------------------------------------------------------------
# config and sequence directories


def write_config(path, config: RadarConfig) -> None:
    with open(path, "w") as f:
        for fld in dataclasses.fields(config):
            v = getattr(config, fld.name)
            f.write(f"{fld.name} = {v if isinstance(v, int) else _fmt(v)}\n")


def read_config(path) -> RadarConfig:
    kinds = {f.name: f.type for f in dataclasses.fields(RadarConfig)}
    kw = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in kinds:
                raise FormatError(f"{path}:{lineno}: unknown key {k!r}")
            kw[k] = int(v) if kinds[k] in (int, "int") else float(v)
    return RadarConfig(**kw)


def _write_rows(path, header, rows, comment=None) -> None:
    with open(path, "w", newline="") as f:
        if comment:
            f.write(f"# {comment}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_table(path, header):
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or tuple(rows[0]) != tuple(header):
        raise FormatError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def write_groundtruth(path, gt: GroundTruth) -> None:
    rows = ((int(gt.t_us[i]), *(_fmt(getattr(gt, k)[i]) for k in GT_FIELDS[1:]))
            for i in range(len(gt)))
    _write_rows(path, GT_FIELDS, rows)


def read_groundtruth(path) -> GroundTruth:
    rows = _read_table(path, GT_FIELDS)
    t = np.array([int(r[0]) for r in rows], np.int64)
    cols = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(-1, 6)
    return GroundTruth(t, *cols.T)


def write_gyro(path, t_us, omega) -> None:
    _write_rows(path, ("t_us", "omega"), ((int(t), _fmt(w)) for t, w in zip(t_us, omega)))


def read_gyro(path):
    rows = _read_table(path, ("t_us", "omega"))
    return np.array([int(r[0]) for r in rows], np.int64), np.array([float(r[1]) for r in rows])


def write_dataset(directory, ds: Dataset) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_config(d / "radar_config", ds.config)
    for scan in ds.scans:
        write_scan_file(d / f"scan_{ds.name}_{scan.scan_id:06d}.drs", scan)
    write_groundtruth(d / "groundtruth.csv", ds.groundtruth)
    if ds.gyro_t_us is not None:
        write_gyro(d / "gyro.csv", ds.gyro_t_us, ds.gyro_omega)


def scan_files(directory):
    found = []
    for name in os.listdir(directory):
        m = SCAN_NAME.match(name)
        if m:
            found.append((m.group(1), int(m.group(2)), name))
    found.sort(key=lambda x: (x[0], x[1]))
    return found


def read_dataset(directory) -> Dataset:
    d = Path(directory)
    config = read_config(d / "radar_config")
    files = scan_files(d)
    if not files:
        raise FormatError(f"{d}: no scan files")
    scans = [read_scan_file(d / name, config) for _, _, name in files]
    gt = read_groundtruth(d / "groundtruth.csv") if (d / "groundtruth.csv").exists() else None
    gyro_t = gyro = None
    if (d / "gyro.csv").exists():
        gyro_t, gyro = read_gyro(d / "gyro.csv")
    return Dataset(config, scans, gt, gyro_t, gyro, files[0][0])


# --------------------------------------------------------------------------
# products


def write_velocities(path, measurement_sets) -> None:
    def rows():
        for U in measurement_sets:
            for j in range(len(U)):
                yield (_fmt(U.timestamp[j]), _fmt(U.pair_index[j]), _fmt(U.angle[j]), _fmt(U.u[j]),
                       _fmt(U.confidence[j]), int(bool(U.valid[j])))

    _write_rows(path, ("t_us", "pair_index", "theta", "u", "confidence", "valid"), rows(),
                VELOCITY_SCHEMA)


def read_velocities(path) -> RadialVelocities:
    rows = _read_table(path, ("t_us", "pair_index", "theta", "u", "confidence", "valid"))
    a = np.array([[float(x) for x in r] for r in rows]).reshape(-1, 6)
    return RadialVelocities(a[:, 3], a[:, 2], a[:, 0], a[:, 1], a[:, 4], a[:, 5] != 0)


def write_ego(path, estimates) -> None:
    rows = ((int(p.timestamp), _fmt(p.v[0]), _fmt(p.v[1]), _fmt(p.covariance[0, 0]),
             _fmt(p.covariance[0, 1]), _fmt(p.covariance[1, 1]), int(p.inlier_count))
            for p in estimates)
    _write_rows(path, ("t_us", "vx", "vy", "cov_xx", "cov_xy", "cov_yy", "inliers"), rows, EGO_SCHEMA)


def read_ego(path) -> list[VelocityPseudoMeasurement]:
    rows = _read_table(path, ("t_us", "vx", "vy", "cov_xx", "cov_xy", "cov_yy", "inliers"))
    out = []
    for r in rows:
        cxx, cxy, cyy = float(r[3]), float(r[4]), float(r[5])
        out.append(VelocityPseudoMeasurement(np.array([float(r[1]), float(r[2])]),
                                             np.array([[cxx, cxy], [cxy, cyy]]), int(r[0]), int(r[6])))
    return out


def write_trajectory(path, traj: Trajectory) -> None:
    rows = ((int(traj.t_us[i]), _fmt(traj.x[i]), _fmt(traj.y[i]), _fmt(traj.yaw[i]), int(traj.flags[i]))
            for i in range(len(traj)))
    _write_rows(path, ("t_us", "x", "y", "yaw", "flag"), rows,
                f"{TRAJECTORY_SCHEMA} mode={traj.mode}")


def read_trajectory(path) -> Trajectory:
    mode = ""
    with open(path) as f:
        first = f.readline()
    if first.startswith("#") and "mode=" in first:
        mode = first.split("mode=", 1)[1].strip()
    rows = _read_table(path, ("t_us", "x", "y", "yaw", "flag"))
    return Trajectory(np.array([int(r[0]) for r in rows], np.int64),
                      np.array([float(r[1]) for r in rows]), np.array([float(r[2]) for r in rows]),
                      np.array([float(r[3]) for r in rows]), np.array([r[4] == "1" for r in rows]),
                      mode)
