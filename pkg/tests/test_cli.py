import json

import numpy as np
import pytest

from visionary.cli import main
from visionary.metrics import CSV_COLUMNS


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def splat_ply_bytes(count=5, seed=0):
    props = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
             "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    header = ("ply\nformat binary_little_endian 1.0\n"
              f"element vertex {count}\n"
              + "".join(f"property float {p}\n" for p in props)
              + "end_header\n")
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(count, len(props))).astype("<f4")
    vals[:, 10:14] /= np.linalg.norm(vals[:, 10:14], axis=1, keepdims=True)
    return header.encode() + vals.tobytes()


@pytest.fixture
def scene_path(tmp_path):
    return write_json(tmp_path, "scene.json", {"models": [
        {"synthetic": {"seed": 1, "count": 80, "extent": 0.5}}]})


class TestRenderCommand:
    def test_writes_png(self, tmp_path, scene_path, capsys):
        cam = write_json(tmp_path, "cam.json",
                         {"eye": [0, 0, 3], "width": 48, "height": 32})
        out = tmp_path / "frame.png"
        rc = main(["render", "--scene", scene_path, "--camera", cam,
                   "--out", str(out)])
        assert rc == 0
        from PIL import Image
        img = Image.open(out)
        assert img.size == (48, 32)
        assert "frame.png" in capsys.readouterr().out

    def test_strategy_and_filter_tokens(self, tmp_path, scene_path):
        cam = write_json(tmp_path, "cam.json",
                         {"radius": 3.0, "width": 24, "height": 24})
        out = tmp_path / "frame.png"
        rc = main(["render", "--scene", scene_path, "--camera", cam,
                   "--out", str(out), "--strategy", "lazy:4",
                   "--filter", "gamma:2.2", "--filter", "blur"])
        assert rc == 0 and out.exists()

    def test_missing_scene_is_error_exit(self, tmp_path, capsys):
        cam = write_json(tmp_path, "cam.json", {"eye": [0, 0, 3]})
        rc = main(["render", "--scene", str(tmp_path / "none.json"),
                   "--camera", cam, "--out", str(tmp_path / "x.png")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_bad_strategy_token(self, tmp_path, scene_path, capsys):
        cam = write_json(tmp_path, "cam.json", {"eye": [0, 0, 3]})
        rc = main(["render", "--scene", scene_path, "--camera", cam,
                   "--out", str(tmp_path / "x.png"), "--strategy", "quick"])
        assert rc == 2


class TestBenchCommand:
    def test_writes_csv_and_json(self, tmp_path, scene_path):
        traj = write_json(tmp_path, "traj.json", {
            "camera": {"width": 24, "height": 24},
            "orbit": {"frames": 3, "radius": 2.5}})
        csv_out = tmp_path / "bench.csv"
        json_out = tmp_path / "bench.json"
        rc = main(["bench", "--scene", scene_path, "--trajectory", traj,
                   "--out", str(csv_out), "--json", str(json_out)])
        assert rc == 0
        lines = csv_out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 4
        doc = json.loads(json_out.read_text())
        assert len(doc["rows"]) == 3


class TestInspectCommand:
    def test_prints_summary(self, tmp_path, capsys):
        ply = tmp_path / "model.ply"
        ply.write_bytes(splat_ply_bytes(count=7))
        rc = main(["inspect", "--ply", str(ply)])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["count"] == 7 and doc["degree"] == 0
        assert len(doc["bounds_min"]) == 3

    def test_garbage_file(self, tmp_path, capsys):
        ply = tmp_path / "junk.ply"
        ply.write_bytes(b"not a ply at all")
        assert main(["inspect", "--ply", str(ply)]) == 2
