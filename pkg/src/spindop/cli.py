"""Command-line entry point: simulate, extract, estimate, odometry, evaluate, repro-table1."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from .doppler_extract import extract_radial_velocities
from .ego_estimator import EstimatorParams, RansacParams, estimate_scan_velocity
from .evaluation import kitti_drift
from .odometry import MODE_ALIASES, OdometryParams, initial_velocity_of, run_odometry
from .radar_core import RadarConfig
from .repro import SCENES, format_table, repro_table1, write_table
from .scan_sim import (SCENE_KINDS, builtin_scene, builtin_trajectory, load_scene_file,
                       load_trajectory_file, simulate_sequence)

log = logging.getLogger("spindop")


def parse_lengths(text: str) -> tuple:
    """'100..800' (step 100), '100..800:50' or '100,200,400'."""
    try:
        if ".." in text:
            rng, _, step = text.partition(":")
            lo, hi = (int(x) for x in rng.split(".."))
            step = int(step) if step else 100
            out = tuple(range(lo, hi + 1, step))
        else:
            out = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lengths {text!r}") from None
    if not out or min(out) <= 0:
        raise argparse.ArgumentTypeError(f"bad lengths {text!r}")
    return out


def _estimator(seed: int) -> EstimatorParams:
    return EstimatorParams(ransac=RansacParams(rng_seed=seed))


def cmd_simulate(a):
    if a.scene in SCENE_KINDS and a.scene != "custom":
        scene = builtin_scene(a.scene, a.seed)
        kind = a.scene
    else:
        scene = load_scene_file(a.scene)
        kind = scene.scene_kind
    if a.traj:
        traj, duration = load_trajectory_file(a.traj), None
    else:
        traj, duration = builtin_trajectory(kind)
    duration = a.duration if a.duration is not None else duration
    if duration is None:
        raise SystemExit("--duration is required with --traj")
    ds = simulate_sequence(scene, traj, duration, RadarConfig(), a.seed, a.gyro_noise, a.gyro_bias,
                           name=a.name)
    io.write_dataset(a.out, ds)
    log.info("wrote %d scans to %s", len(ds), a.out)


def cmd_extract(a):
    ds = io.read_dataset(a.input)
    io.write_velocities(a.out, (extract_radial_velocities(s) for s in ds.scans))


def cmd_estimate(a):
    ds = io.read_dataset(a.input)
    params, prev, out = _estimator(a.seed), None, []
    if ds.groundtruth is not None:
        # the first scan is gated by the known starting velocity
        prev = initial_velocity_of(ds)[:2]
    for scan in ds.scans:
        prev = estimate_scan_velocity(scan, prev, params)
        out.append(prev)
    io.write_ego(a.out, out)


def cmd_odometry(a):
    ds = io.read_dataset(a.input)
    params = OdometryParams(estimator=_estimator(a.seed))
    io.write_trajectory(a.out, run_odometry(ds, a.mode, params))


def cmd_evaluate(a):
    est = io.read_trajectory(a.est)
    gt = io.read_groundtruth(a.gt)
    rep = kitti_drift(est, gt, a.lengths, est.mode)
    _write_json(a.out, rep.to_dict())


def cmd_repro(a):
    seeds = tuple(range(a.seed, a.seed + a.seeds))
    params = OdometryParams(estimator=_estimator(a.seed))
    res = repro_table1(seeds, a.scenes, params=params, gyro_noise=a.gyro_noise)
    write_table(a.out, res)
    sys.stdout.write(format_table(res))


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spindop", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="render a synthetic sequence to a directory")
    s.add_argument("--scene", required=True, help="builtin kind or YAML scene file")
    s.add_argument("--traj", help="YAML trajectory file (default: the scene's builtin)")
    s.add_argument("--duration", type=float)
    s.add_argument("--gyro-noise", type=float, default=0.0, help="rad/s, per sample")
    s.add_argument("--gyro-bias", type=float, default=0.0, help="rad/s")
    s.add_argument("--name", default="0000", help="sequence name used in scan file names")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("extract", help="radial velocities of every scan")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("estimate", help="per-scan ego-velocity")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("odometry", help="trajectory from one odometry mode")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--mode", required=True, choices=sorted(MODE_ALIASES))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_odometry)

    s = sub.add_parser("evaluate", help="drift of a trajectory against ground truth")
    s.add_argument("--est", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--lengths", type=parse_lengths, default=parse_lengths("100..800"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("repro-table1", help="all modes on all builtin scenes")
    s.add_argument("--out", required=True)
    s.add_argument("--seeds", type=int, default=4, help="number of seeds per scene")
    s.add_argument("--scenes", nargs="+", default=list(SCENES), choices=SCENES)
    s.add_argument("--gyro-noise", type=float, default=0.0)
    s.set_defaults(func=cmd_repro)

    for s in sub.choices.values():
        s.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = os.environ.get("SPINDOP_LOG_LEVEL", "INFO" if args.verbose else "WARNING")
    logging.basicConfig(level=level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        log.error("%s failed: %s", args.command, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
