"""Command-line entry points.

Exit codes: 0 success, 2 input or validation error, 3 data-consistency error
(frame counts or image sizes that do not pair up).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .camera import load_camera
from .dataset import frame_name, read_dataset, write_dataset
from .depth import check_same_shape, read_depth, write_depth
from .errors import ConfigError, DataConsistencyError, ParseError
from .handlers import PolicyConfig, Status, TrackState, cv_update, hold_update
from .kinematics import read_trajectory_csv
from .occlusion import (
    OcclusionConfig, UnknownPolicy, depth_to_gray, occlusion_mask, overlay,
    region_occlusion_fraction, region_pixels, safe_deproject, write_mask,
)
from .raster import render_frame
from .urdf import load_urdf

log = logging.getLogger("robovdi")

EXIT_OK, EXIT_INPUT, EXIT_DATA = 0, 2, 3
#: Frames allowed in flight between the render stage and the writer threads.
MAX_IN_FLIGHT = 4
DEPTH_EXTS = (".png", ".txt")


@dataclass
class RunManifest:
    """Record of one CLI invocation, written as ``run.json`` in the output directory."""

    command: str
    inputs: dict[str, str]
    output: str
    overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        for role, p in self.inputs.items():
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(f"{role} not found: {p}")
        out = Path(self.output)
        target = out if out.is_dir() else out.parent
        if target.exists() and not os.access(target, os.W_OK):
            raise PermissionError(f"output directory not writable: {target}")

    def write(self, out_dir: Path) -> None:
        (out_dir / "run.json").write_text(json.dumps(asdict(self), indent=1))


def _parse_region(text: str | None):
    if text is None:
        return None
    try:
        x, y, w, h = (int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--region expects x,y,w,h integers, got {text!r}") from None
    return x, y, w, h


class _OrderedWriter:
    """Runs file writes on worker threads; reports finished frames in submission order."""

    def __init__(self, pool: ThreadPoolExecutor, limit: int = MAX_IN_FLIGHT):
        self.pool = pool
        self.limit = limit
        self.pending: deque = deque()

    def submit(self, report, *jobs):
        futures = [self.pool.submit(fn, *args) for fn, *args in jobs]
        self.pending.append((futures, report))
        while len(self.pending) > self.limit:
            self._pop()

    def _pop(self):
        futures, report = self.pending.popleft()
        for f in futures:
            f.result()
        if report:
            print(report, flush=True)

    def drain(self):
        while self.pending:
            self._pop()


def cmd_render(args) -> int:
    run = RunManifest(
        "render",
        {"URDF": args.urdf, "trajectory": args.trajectory, "camera config": args.camera},
        args.out,
        {"format": args.format},
    )
    run.validate()
    model = load_urdf(args.urdf)
    states = read_trajectory_csv(args.trajectory)
    cam = load_camera(Path(args.camera).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "." + args.format
    times = []
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=2) as pool:
        writer = _OrderedWriter(pool)
        for i, q in enumerate(states):
            t0 = time.perf_counter()
            img = render_frame(model, q, cam)
            ms = 1000.0 * (time.perf_counter() - t0)
            times.append(ms)
            line = f"frame {i:06d} t={q.timestamp:.4f} render_ms={ms:.3f} silhouette_px={img.count_valid()}"
            writer.submit(line, (write_depth, out / frame_name(i, ext), img))
        writer.drain()
    wall = time.perf_counter() - start
    run.overrides["frames"] = len(states)
    run.write(out)
    if states:
        print(
            f"rendered {len(states)} frames in {wall:.3f} s ({len(states) / wall:.1f} fps), "
            f"median render {np.median(times):.3f} ms",
            flush=True,
        )
    return EXIT_OK


def _depth_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in DEPTH_EXTS and p.is_file())


def cmd_occlude(args) -> int:
    run = RunManifest(
        "occlude",
        {
            "actual frame directory": args.actual,
            "URDF": args.urdf,
            "trajectory": args.trajectory,
            "camera config": args.camera,
            "color directory": args.color,
        },
        args.out,
        {"epsilon": args.epsilon, "region": args.region},
    )
    run.validate()
    cfg = OcclusionConfig(args.epsilon)
    region = _parse_region(args.region)
    model = load_urdf(args.urdf)
    states = read_trajectory_csv(args.trajectory)
    cam = load_camera(Path(args.camera).read_text())
    frames = _depth_files(Path(args.actual))
    if len(frames) != len(states):
        raise DataConsistencyError(
            f"{len(frames)} depth frames in {args.actual} but {len(states)} trajectory rows"
        )
    colors = _depth_files_rgb(Path(args.color)) if args.color else None
    if colors is not None and len(colors) != len(frames):
        raise DataConsistencyError(f"{len(colors)} color images but {len(frames)} depth frames")
    out = Path(args.out)
    (out / "mask").mkdir(parents=True, exist_ok=True)
    (out / "overlay").mkdir(parents=True, exist_ok=True)
    if region is not None:
        region_pixels(cam.shape, region)

    stats_rows = []
    with ThreadPoolExecutor(max_workers=2) as pool:
        writer = _OrderedWriter(pool)
        for i, (path, q) in enumerate(zip(frames, states)):
            actual = read_depth(path)
            if actual.shape != cam.shape:
                raise DataConsistencyError(f"{path}: {actual.width}x{actual.height} does not match camera {cam.width}x{cam.height}")
            vdi = render_frame(model, q, cam)
            mask = occlusion_mask(actual, vdi, cfg)
            c = mask.counts()
            row = {"frame": i, "t": q.timestamp, "no_robot": c["NO_ROBOT"], "visible": c["VISIBLE"],
                   "unknown": c["UNKNOWN"], "occluded": c["OCCLUDED"]}
            if region is not None:
                row["region_fraction"] = region_occlusion_fraction(mask, region)
            stats_rows.append(row)
            if colors is not None:
                with Image.open(colors[i]) as im:
                    base = np.array(im.convert("RGB"))
            else:
                base = depth_to_gray(actual, cam.near, cam.far)
            tinted = overlay(mask, base)
            line = " ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items())
            writer.submit(
                line,
                (write_mask, out / "mask" / frame_name(i), mask),
                (lambda p, a: Image.fromarray(a).save(p, compress_level=1), out / "overlay" / frame_name(i), tinted),
            )
        writer.drain()
    with open(out / "stats.csv", "w", newline="") as f:
        if stats_rows:
            w = csv.DictWriter(f, fieldnames=list(stats_rows[0]))
            w.writeheader()
            w.writerows(stats_rows)
    run.write(out)
    return EXIT_OK


def _depth_files_rgb(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg") and p.is_file())


def cmd_simulate(args) -> int:
    from .sim.scenario_file import load_scenario

    run = RunManifest("simulate", {"scenario file": args.scenario}, args.out, {})
    run.validate()
    sc = load_scenario(args.scenario)
    out = write_dataset(args.out, sc.kind, sc.frames, sc.camera, sc.robot_path, sc.fps, sc.joint_names)
    run.overrides["frames"] = len(sc.frames)
    run.write(out)
    print(f"wrote {len(sc.frames)} {sc.kind} frames to {out}", flush=True)
    return EXIT_OK


TRACK_FIELDS = ("t", "status", "x", "y", "z", "occlusion_fraction", "error_vs_truth")


def track_dataset(ds, policy: str, threshold: float, epsilon: float = 0.01, smoothing: float = 0.0,
                  unknown: str = "occluded") -> list[dict]:
    """Replay a dataset through a tracking policy; one row per frame."""
    if policy not in ("cv", "hold"):
        raise ConfigError(f"unknown policy {policy!r} (expected 'cv' or 'hold')")
    pcfg = PolicyConfig(threshold, smoothing)
    ocfg = OcclusionConfig(epsilon)
    cam = ds.camera
    c2w = cam.camera_to_world
    state = TrackState.empty()
    held = None
    rows = []
    for rec in ds.frames:
        i = rec["index"]
        actual, vdi = ds.actual(i), ds.vdi(i)
        check_same_shape(actual, vdi)
        if actual.shape != cam.shape:
            raise DataConsistencyError(f"frame {i}: image size does not match camera")
        mask = occlusion_mask(actual, vdi, ocfg)
        region = ds.region(i)
        meas = rec.get("measurement")
        if rec.get("keypoint") is not None:
            u, v = rec["keypoint"]
            res = safe_deproject(u, v, actual, mask, cam)
            fraction = 0.0 if res.ok else 1.0
            meas = c2w.apply(res.point) if res.ok else None
        elif region is not None:
            fraction = region_occlusion_fraction(mask, region, UnknownPolicy(unknown))
        else:
            fraction = 0.0
        meas = None if meas is None else np.asarray(meas, dtype=np.float64)

        if policy == "cv":
            state = cv_update(state, meas, fraction, rec["t"], pcfg)
            status, pos = state.status.value, state.position
        else:
            occluded = fraction > threshold
            held = hold_update(held, meas, occluded)
            pos = held
            if not occluded and meas is not None:
                status = Status.MEASURED.value
            else:
                status = "Held" if held is not None else Status.EMPTY.value
        truth = rec.get("truth")
        err = float(np.linalg.norm(np.asarray(pos) - np.asarray(truth))) if pos is not None and truth is not None else None
        rows.append(
            {
                "t": rec["t"],
                "status": status,
                "x": None if pos is None else float(pos[0]),
                "y": None if pos is None else float(pos[1]),
                "z": None if pos is None else float(pos[2]),
                "occlusion_fraction": fraction,
                "error_vs_truth": err,
            }
        )
    return rows


def cmd_track(args) -> int:
    if not 0.0 <= args.threshold <= 1.0:
        raise ConfigError(f"--threshold must be a fraction in [0, 1], got {args.threshold}")
    run = RunManifest("track", {"dataset": args.dataset}, args.out,
                      {"policy": args.policy, "threshold": args.threshold, "epsilon": args.epsilon})
    run.validate()
    ds = read_dataset(args.dataset)
    rows = track_dataset(ds, args.policy, args.threshold, args.epsilon, args.smoothing, args.unknown)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRACK_FIELDS)
        for r in rows:
            w.writerow(["" if r[k] is None else (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in TRACK_FIELDS])
    errs = [r["error_vs_truth"] for r in rows if r["error_vs_truth"] is not None]
    summary = f"tracked {len(rows)} frames with policy {args.policy}"
    if errs:
        summary += f", max error {max(errs):.6f} m, final error {errs[-1]:.6f} m"
    print(summary, flush=True)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robovdi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render virtual depth images along a joint trajectory")
    r.add_argument("--urdf", required=True)
    r.add_argument("--trajectory", required=True, help="CSV with header t,<joint1>,...")
    r.add_argument("--camera", required=True, help="camera config (YAML)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--format", choices=("png", "txt"), default="png")
    r.set_defaults(func=cmd_render)

    o = sub.add_parser("occlude", help="classify occlusion in recorded depth frames")
    o.add_argument("--actual", required=True, help="directory of depth frames (png mm / txt m)")
    o.add_argument("--urdf", required=True)
    o.add_argument("--trajectory", required=True)
    o.add_argument("--camera", required=True)
    o.add_argument("--epsilon", type=float, default=0.01)
    o.add_argument("--region", help="x,y,w,h box for per-frame occlusion fraction")
    o.add_argument("--color", help="directory of RGB images to tint (default: depth rendering)")
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_occlude)

    s = sub.add_parser("simulate", help="generate a synthetic dataset from a scenario file")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("track", help="replay a dataset through an occlusion-handling policy")
    t.add_argument("--dataset", required=True)
    t.add_argument("--policy", default="cv", help="cv (constant velocity) or hold (last unoccluded)")
    t.add_argument("--threshold", type=float, default=0.05)
    t.add_argument("--epsilon", type=float, default=0.01)
    t.add_argument("--smoothing", type=float, default=0.0)
    t.add_argument("--unknown", choices=[u.value for u in UnknownPolicy], default="occluded")
    t.add_argument("--out", required=True, help="output CSV path")
    t.set_defaults(func=cmd_track)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DataConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, PermissionError, ParseError, ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
