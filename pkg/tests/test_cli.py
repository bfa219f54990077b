import csv
import json

import numpy as np
import pytest

from robovdi.camera import dump_camera
from robovdi.cli import main
from robovdi.depth import DepthImage, write_depth
from robovdi.kinematics import write_trajectory_csv
from robovdi.mesh import box
from robovdi.occlusion import read_mask
from robovdi.raster import render_frame
from robovdi.sim import Scene, Target, near_boundary, simulate_sensor
from robovdi.sim.scenarios import (
    ARM6_JOINTS, PARKED, arm6_path, arm6_state, default_camera, load_arm6,
)
from robovdi.transforms import RigidTransform


@pytest.fixture
def inputs(tmp_path):
    cam = default_camera(160, 120)
    (tmp_path / "camera.yaml").write_text(dump_camera(cam))
    states = [arm6_state([0.1 * i, np.pi / 2 - 0.1 * i, 0.05 * i, 0, 0, 0], t=i / 30) for i in range(10)]
    write_trajectory_csv(tmp_path / "traj.csv", states, ARM6_JOINTS)
    return {
        "dir": tmp_path, "cam": cam, "states": states, "urdf": str(arm6_path()),
        "camera": str(tmp_path / "camera.yaml"), "traj": str(tmp_path / "traj.csv"),
    }


def render(inputs, out, fmt="png"):
    return main(["render", "--urdf", inputs["urdf"], "--trajectory", inputs["traj"],
                 "--camera", inputs["camera"], "--out", str(out), "--format", fmt])


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_render_writes_one_file_per_row(inputs, capsys):
    out = inputs["dir"] / "vdi"
    assert render(inputs, out) == 0
    files = sorted(out.glob("*.png"))
    assert [f.name for f in files] == [f"{i:06d}.png" for i in range(10)]
    text = capsys.readouterr().out
    assert text.count("render_ms=") == 10
    assert "fps" in text
    run = json.loads((out / "run.json").read_text())
    assert run["command"] == "render" and run["overrides"]["frames"] == 10


def test_render_is_repeatable(inputs):
    a, b = inputs["dir"] / "a", inputs["dir"] / "b"
    assert render(inputs, a, "txt") == 0
    assert render(inputs, b, "txt") == 0
    for fa in sorted(a.glob("*.txt")):
        assert fa.read_bytes() == (b / fa.name).read_bytes()


def test_render_missing_urdf(inputs, capsys):
    inputs["urdf"] = "/nonexistent/robot.urdf"
    assert render(inputs, inputs["dir"] / "x") == 2
    assert "/nonexistent/robot.urdf" in capsys.readouterr().err


def test_render_bad_camera(inputs, capsys):
    (inputs["dir"] / "camera.yaml").write_text("width: 10\n")
    assert render(inputs, inputs["dir"] / "x") == 2
    assert "camera" in capsys.readouterr().err


def make_actual(inputs, n=None):
    """Noise-free sensor frames with a box in front of the arm."""
    cam, states = inputs["cam"], inputs["states"][:n]
    robot = load_arm6()
    target = Target("box", box((0.15, 0.15, 0.15)), RigidTransform.from_translation((0.6, 0.0, 0.6)))
    d = inputs["dir"] / "actual"
    d.mkdir(exist_ok=True)
    frames = []
    for i, q in enumerate(states):
        f = simulate_sensor(Scene(robot, q, cam, [target]))
        write_depth(d / f"{i:06d}.txt", f.actual)
        frames.append(f)
    return d, frames


def test_occlude_matches_truth(inputs):
    actual_dir, frames = make_actual(inputs)
    out = inputs["dir"] / "occ"
    rc = main(["occlude", "--actual", str(actual_dir), "--urdf", inputs["urdf"],
               "--trajectory", inputs["traj"], "--camera", inputs["camera"],
               "--region", "60,30,40,40", "--out", str(out)])
    assert rc == 0
    rows = read_rows(out / "stats.csv")
    assert len(rows) == 10 and "region_fraction" in rows[0]
    for i, f in enumerate(frames):
        mask = read_mask(out / "mask" / f"{i:06d}.png")
        hits = [f.robot_depth.valid, f.vdi.valid, f.actual.valid, *(d.valid for d in f.target_depths.values())]
        keep = ~near_boundary(hits, 1)
        assert np.array_equal(mask.labels[keep], f.truth.labels[keep])
        assert (out / "overlay" / f"{i:06d}.png").exists()
    assert sum(int(r["visible"]) for r in rows) > 0


def test_occlude_count_mismatch(inputs, capsys):
    actual_dir, _ = make_actual(inputs, n=7)
    rc = main(["occlude", "--actual", str(actual_dir), "--urdf", inputs["urdf"],
               "--trajectory", inputs["traj"], "--camera", inputs["camera"],
               "--out", str(inputs["dir"] / "occ")])
    assert rc == 3
    assert "7 depth frames" in capsys.readouterr().err


def test_occlude_size_mismatch(inputs):
    actual_dir = inputs["dir"] / "actual"
    actual_dir.mkdir()
    for i in range(10):
        write_depth(actual_dir / f"{i:06d}.png", DepthImage(np.ones((10, 10))))
    rc = main(["occlude", "--actual", str(actual_dir), "--urdf", inputs["urdf"],
               "--trajectory", inputs["traj"], "--camera", inputs["camera"],
               "--out", str(inputs["dir"] / "occ")])
    assert rc == 3


def simulate(tmp_path, text, name="ds"):
    (tmp_path / "scenario.yaml").write_text(text)
    out = tmp_path / name
    return main(["simulate", "--scenario", str(tmp_path / "scenario.yaml"), "--out", str(out)]), out


def test_simulate_zero_duration(tmp_path):
    rc, out = simulate(tmp_path, "kind: conveyor\nduration: 0\n")
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["frames"] == []


def test_simulate_missing_mesh(tmp_path, capsys):
    text = f"""kind: scene
robot: {arm6_path()}
trajectory: traj.csv
targets: [{{name: a, mesh: missing.stl}}]
"""
    (tmp_path / "traj.csv").write_text("t," + ",".join(ARM6_JOINTS) + "\n0,0,0,0,0,0,0\n")
    rc, _ = simulate(tmp_path, text)
    assert rc == 2
    assert "missing.stl" in capsys.readouterr().err


def track(ds, out, *extra):
    return main(["track", "--dataset", str(ds), "--out", str(out), *extra])


def test_track_cv_transitions(tmp_path):
    rc, ds = simulate(tmp_path, "kind: conveyor\nduration: 3\nfps: 10\nocclusion_window: [1.0, 2.0]\n")
    assert rc == 0
    assert track(ds, tmp_path / "track.csv", "--policy", "cv") == 0
    rows = read_rows(tmp_path / "track.csv")
    assert len(rows) == 30
    for r in rows:
        fraction = float(r["occlusion_fraction"])
        assert r["status"] == ("Predicted" if fraction > 0.05 else "Measured")
        assert float(r["error_vs_truth"]) < 1e-6
    assert any(r["status"] == "Predicted" for r in rows)


def test_track_hold_keeps_position(tmp_path):
    rc, ds = simulate(tmp_path, "kind: handover\nduration: 2\nfps: 10\nocclusion_window: [0.7, 1.3]\n")
    assert rc == 0
    assert track(ds, tmp_path / "hold.csv", "--policy", "hold") == 0
    rows = read_rows(tmp_path / "hold.csv")
    held = [r for r in rows if r["status"] == "Held"]
    assert held
    last_seen = None
    for r in rows:
        pos = (r["x"], r["y"], r["z"])
        if r["status"] == "Measured":
            last_seen = pos
        else:
            assert pos == last_seen


@pytest.mark.parametrize("extra", [("--threshold", "1.1"), ("--policy", "magic"), ("--smoothing", "2")])
def test_track_bad_options(tmp_path, extra):
    rc, ds = simulate(tmp_path, "kind: conveyor\nduration: 0.2\nfps: 10\n")
    assert rc == 0
    assert track(ds, tmp_path / "t.csv", *extra) == 2


def test_track_missing_dataset(tmp_path, capsys):
    assert track(tmp_path / "nothing", tmp_path / "t.csv") == 2
    assert "nothing" in capsys.readouterr().err


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.strip()


def test_parked_robot_in_view(inputs):
    assert render_frame(load_arm6(), arm6_state(PARKED), inputs["cam"]).count_valid() > 0
