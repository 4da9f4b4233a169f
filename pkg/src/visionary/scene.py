"""Scene/camera/trajectory descriptors: small JSON files the CLI and the
serving layer share.

A scene descriptor lists model instances -- each either a splat asset on
disk (.ply / .vspk), a generator fixture descriptor, or a seeded synthetic
cloud -- plus an optional occluder mesh and a background color. Camera and
trajectory descriptors capture look-at or orbit parameters.
"""
from __future__ import annotations

import json
import math
import os

import numpy as np

from .assets import deserialize_buffer, parse_mesh_obj, parse_splat_ply
from .errors import AssetParseError, InvalidInputError, SchemaError
from .generators.fixtures import load_fixture, toy_cloud
from .pipeline import ModelInstance, Scene
from .splatmath import Camera


def _read_json(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise AssetParseError(f"cannot read descriptor {path!r}: {e}") from e


def _transform_from(entry) -> np.ndarray:
    t = entry.get("transform")
    if t is None:
        return np.eye(4)
    arr = np.asarray(t, dtype=np.float64)
    if arr.size != 16:
        raise SchemaError("transform must hold 16 numbers (row-major 4x4)")
    return arr.reshape(4, 4)


def _load_source(entry: dict, base_dir: str):
    keys = [k for k in ("asset", "fixture", "synthetic") if k in entry]
    if len(keys) != 1:
        raise SchemaError(
            "model entry needs exactly one of 'asset', 'fixture', 'synthetic'")
    kind = keys[0]
    if kind == "synthetic":
        spec = entry["synthetic"]
        return toy_cloud(int(spec.get("seed", 0)), count=int(spec["count"]),
                         degree=int(spec.get("degree", 1)),
                         extent=float(spec.get("extent", 1.0)))
    path = os.path.join(base_dir, entry[kind])
    if kind == "fixture":
        return load_fixture(path)
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise AssetParseError(f"cannot read asset {path!r}: {e}") from e
    ext = os.path.splitext(path)[1].lower()
    if ext == ".ply":
        return parse_splat_ply(blob)
    if ext == ".vspk":
        return deserialize_buffer(blob)
    raise SchemaError(f"unknown asset extension {ext!r} (expect .ply or .vspk)")


def load_scene(path: str) -> Scene:
    """Build a Scene from its JSON descriptor (paths resolve next to it)."""
    desc = _read_json(path)
    base = os.path.dirname(path) or "."
    models = desc.get("models")
    if not isinstance(models, list) or not models:
        raise SchemaError("scene descriptor needs a non-empty 'models' list")
    instances = []
    for i, entry in enumerate(models):
        instances.append(ModelInstance(
            source=_load_source(entry, base),
            transform=_transform_from(entry),
            model_id=int(entry.get("model_id", i))))
    mesh = None
    if "mesh" in desc:
        mesh_path = os.path.join(base, desc["mesh"])
        try:
            with open(mesh_path, "rb") as f:
                mesh = parse_mesh_obj(f.read())
        except OSError as e:
            raise AssetParseError(f"cannot read mesh {mesh_path!r}: {e}") from e
    background = tuple(desc.get("background", (0.0, 0.0, 0.0)))
    if len(background) != 3:
        raise SchemaError("background must be an [r,g,b] triple")
    return Scene(instances=instances, mesh=mesh, background=background)


def orbit_camera(yaw: float, pitch: float, radius: float, target=(0.0, 0.0, 0.0),
                 fov_y: float = math.radians(60.0), *, width: int = 512,
                 height: int = 512, near: float = 0.1,
                 far: float = 100.0) -> Camera:
    """Camera on an orbit around `target`; yaw/pitch in radians.

    yaw 0, pitch 0 places the eye on the +z axis looking at the target.
    """
    if radius <= 0 or not np.isfinite([yaw, pitch, radius]).all():
        raise InvalidInputError("orbit needs finite yaw/pitch and radius > 0")
    pitch = float(np.clip(pitch, -math.pi / 2 + 1e-3, math.pi / 2 - 1e-3))
    target = np.asarray(target, dtype=np.float64).reshape(3)
    eye = target + radius * np.array([
        math.sin(yaw) * math.cos(pitch), math.sin(pitch),
        math.cos(yaw) * math.cos(pitch)])
    return Camera.look_at(eye, target, width=width, height=height,
                          fov_y=fov_y, near=near, far=far)


def camera_from_dict(desc: dict) -> Camera:
    """Camera from a look-at or orbit style JSON object."""
    width = int(desc.get("width", 512))
    height = int(desc.get("height", 512))
    near = float(desc.get("near", 0.1))
    far = float(desc.get("far", 100.0))
    fov_y = math.radians(float(desc.get("fov_y_deg", 60.0)))
    if "eye" in desc:
        return Camera.look_at(desc["eye"], desc.get("target", (0, 0, 0)),
                              desc.get("up", (0, 1, 0)), width=width,
                              height=height, fov_y=fov_y, near=near, far=far)
    if "radius" in desc:
        return orbit_camera(
            math.radians(float(desc.get("yaw_deg", 0.0))),
            math.radians(float(desc.get("pitch_deg", 0.0))),
            float(desc["radius"]), desc.get("target", (0, 0, 0)), fov_y,
            width=width, height=height, near=near, far=far)
    raise SchemaError("camera descriptor needs 'eye' or 'radius'")


def load_camera(path: str) -> Camera:
    return camera_from_dict(_read_json(path))


def load_trajectory(path: str):
    """[(Camera, GeneratorInputs)] from a trajectory descriptor.

    Either an explicit "frames" list of camera objects (each optionally
    with "time"), or an "orbit" sweep: base camera fields plus frames,
    yaw_start_deg, yaw_end_deg, and an optional time ramp.
    """
    from .generators import GeneratorInputs

    desc = _read_json(path)
    out = []
    if "frames" in desc:
        for i, fr in enumerate(desc["frames"]):
            cam = camera_from_dict({**desc.get("camera", {}), **fr})
            out.append((cam, GeneratorInputs(frame_index=i,
                                             time=float(fr.get("time", 0.0)))))
    elif "orbit" in desc:
        orb = desc["orbit"]
        n = int(orb.get("frames", 8))
        if n < 1:
            raise SchemaError("orbit needs at least one frame")
        y0 = math.radians(float(orb.get("yaw_start_deg", 0.0)))
        y1 = math.radians(float(orb.get("yaw_end_deg", 360.0)))
        t0, t1 = (float(x) for x in orb.get("time_range", (0.0, 0.0)))
        base = desc.get("camera", {})
        for i in range(n):
            f = i / max(n - 1, 1)
            cam = orbit_camera(
                y0 + f * (y1 - y0),
                math.radians(float(orb.get("pitch_deg", 0.0))),
                float(orb["radius"]), orb.get("target", (0, 0, 0)),
                math.radians(float(base.get("fov_y_deg", 60.0))),
                width=int(base.get("width", 512)),
                height=int(base.get("height", 512)),
                near=float(base.get("near", 0.1)),
                far=float(base.get("far", 100.0)))
            out.append((cam, GeneratorInputs(frame_index=i,
                                             time=t0 + f * (t1 - t0))))
    else:
        raise SchemaError("trajectory descriptor needs 'frames' or 'orbit'")
    if not out:
        raise SchemaError("trajectory is empty")
    return out
