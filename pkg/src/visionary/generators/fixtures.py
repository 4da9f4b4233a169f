"""Deterministic toy generator fixtures and their on-disk form.

No pretrained weights ship with the engine, so every generator family has
a seeded toy builder (small MLPs, coarse grids, short kinematic chains).
Fixtures persist as a JSON descriptor next to a flat binary weight
container: all float32 arrays concatenated little-endian in the order
listed under "arrays". Integer topology (joint parents) and activation
tags live in the JSON.
"""
from __future__ import annotations

import json
import os

import numpy as np

from ..errors import AssetParseError, BoundsError, InvalidInputError
from ..splatmath import GaussianCloud
from .avatar import AvatarRig, LbsAvatarGenerator
from .base import Generator, StaticGenerator
from .hexplane import PLANE_ORDER, HexPlaneField, HexPlaneGenerator
from .mlp import AnchorMlpGenerator, AnchorSet, MlpParams


def _unit_quats(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def toy_cloud(seed: int, count: int = 256, degree: int = 1,
              extent: float = 1.0, scale_mean: float = -3.2) -> GaussianCloud:
    """Random Gaussian cloud in a cube of half-width `extent`."""
    rng = np.random.default_rng(seed)
    positions = rng.uniform(-extent, extent, size=(count, 3))
    scales = np.exp(rng.normal(scale_mean, 0.3, size=(count, 3)))
    rotations = _unit_quats(rng, count)
    opacities = rng.uniform(0.2, 0.95, size=count)
    n_coef = (degree + 1) ** 2
    sh = rng.normal(0.0, 0.5, size=(count, n_coef, 3))
    sh[:, 1:] *= 0.15
    return GaussianCloud(positions, scales, rotations, opacities, sh, degree)


def _toy_mlp(rng, dims, final_act="identity", hidden_act="tanh",
             scale: float = 0.3) -> MlpParams:
    layers = []
    for i in range(len(dims) - 1):
        w = rng.normal(0.0, scale / np.sqrt(dims[i]), size=(dims[i + 1], dims[i]))
        b = rng.normal(0.0, 0.05, size=dims[i + 1])
        act = final_act if i == len(dims) - 2 else hidden_act
        layers.append((w, b, act))
    return MlpParams(layers)


def toy_static(seed: int, count: int = 256, degree: int = 1) -> StaticGenerator:
    return StaticGenerator(toy_cloud(seed, count, degree))


def toy_anchor_mlp(seed: int, anchors: int = 64, k: int = 4,
                   features: int = 8) -> AnchorMlpGenerator:
    rng = np.random.default_rng(seed)
    anchor_set = AnchorSet(
        anchor_positions=rng.uniform(-1.0, 1.0, size=(anchors, 3)),
        anchor_scales=np.exp(rng.normal(-1.5, 0.2, size=(anchors, 3))),
        features=rng.normal(0.0, 1.0, size=(anchors, features)),
        offsets_per_anchor=k)
    in_dim = features + 3
    heads = {
        "offset": _toy_mlp(rng, (in_dim, 16, 3 * k)),
        "opacity": _toy_mlp(rng, (in_dim, 16, k)),
        "cov": _toy_mlp(rng, (in_dim, 16, 7 * k), scale=0.15),
        "color": _toy_mlp(rng, (in_dim, 16, 3 * k)),
    }
    # Bias opacities so a healthy fraction of candidates survives pruning.
    w, b, act = heads["opacity"].layers[-1]
    heads["opacity"].layers[-1] = (w, b + 1.0, act)
    # Keep decoded scales small so splats stay splat-sized.
    w, b, act = heads["cov"].layers[-1]
    b = b.copy()
    b[: 3 * k].reshape(k, 3)[:] += -3.0
    heads["cov"].layers[-1] = (w, b, act)
    return AnchorMlpGenerator(anchor_set, heads)


def toy_hexplane(seed: int, count: int = 128, grid: int = 16,
                 features: int = 4) -> HexPlaneGenerator:
    rng = np.random.default_rng(seed)
    canonical = toy_cloud(seed + 1, count)
    planes = {name: rng.normal(0.0, 0.3, size=(grid, grid, features))
              for name in PLANE_ORDER}
    in_dim = 6 * features
    field = HexPlaneField(
        planes=planes, canonical=canonical,
        head_dx=_toy_mlp(rng, (in_dim, 16, 3), scale=0.1),
        head_dr=_toy_mlp(rng, (in_dim, 16, 4), scale=0.1),
        head_ds=_toy_mlp(rng, (in_dim, 16, 3), scale=0.1),
        bounds_min=np.full(3, -1.2), bounds_max=np.full(3, 1.2))
    return HexPlaneGenerator(field)


def toy_lbs(seed: int, count: int = 200, joints: int = 4) -> LbsAvatarGenerator:
    rng = np.random.default_rng(seed)
    parent = np.arange(-1, joints - 1)
    rest_local = np.tile(np.eye(4), (joints, 1, 1))
    rest_local[1:, 1, 3] = 0.5            # chain of bones stacked along +y
    joint_origins = np.zeros((joints, 3))
    for j in range(1, joints):
        joint_origins[j] = joint_origins[j - 1] + rest_local[j, :3, 3]
    canonical = toy_cloud(seed + 1, count, extent=0.3)
    canonical.positions[:, 1] += rng.uniform(0.0, 0.5 * (joints - 1), size=count).astype(np.float32)
    d = np.linalg.norm(canonical.positions[:, None, :].astype(np.float64)
                       - joint_origins[None], axis=2)
    logits = -6.0 * d
    weights = np.exp(logits - logits.max(axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    rig = AvatarRig(canonical=canonical, parent=parent,
                    rest_local=rest_local, skin_weights=weights)
    return LbsAvatarGenerator(rig)


_TOY_BUILDERS = {
    "static": toy_static,
    "anchor_mlp": toy_anchor_mlp,
    "hexplane": toy_hexplane,
    "lbs": toy_lbs,
}


def build_toy(kind: str, seed: int = 0, **kwargs) -> Generator:
    if kind not in _TOY_BUILDERS:
        raise InvalidInputError(f"unknown generator kind {kind!r}")
    return _TOY_BUILDERS[kind](seed, **kwargs)


# ---------------------------------------------------------------------------
# Descriptor + flat binary container I/O
# ---------------------------------------------------------------------------

def _collect_arrays(gen: Generator):
    """Flatten a generator into (kind, meta, ordered name->array dict)."""
    def mlp_entry(params: MlpParams, prefix, arrays, meta_layers):
        acts = []
        for i, (w, b, act) in enumerate(params.layers):
            arrays[f"{prefix}.{i}.weight"] = w
            arrays[f"{prefix}.{i}.bias"] = b
            acts.append(act)
        meta_layers[prefix] = acts

    arrays: dict[str, np.ndarray] = {}
    meta: dict = {"activations": {}}
    if isinstance(gen, StaticGenerator):
        kind = "static"
        c = gen.cloud
        arrays.update(positions=c.positions, scales=c.scales,
                      rotations=c.rotations, opacities=c.opacities,
                      sh=c.sh)
        meta["degree"] = c.degree
    elif isinstance(gen, AnchorMlpGenerator):
        kind = "anchor_mlp"
        a = gen.anchors
        arrays.update(anchor_positions=a.anchor_positions,
                      anchor_scales=a.anchor_scales, features=a.features)
        meta["offsets_per_anchor"] = a.offsets_per_anchor
        for name, head in gen.heads.items():
            mlp_entry(head, f"head.{name}", arrays, meta["activations"])
    elif isinstance(gen, HexPlaneGenerator):
        kind = "hexplane"
        f = gen.field
        for name in PLANE_ORDER:
            arrays[f"plane.{name}"] = f.planes[name]
        c = f.canonical
        arrays.update({"canonical.positions": c.positions,
                       "canonical.scales": c.scales,
                       "canonical.rotations": c.rotations,
                       "canonical.opacities": c.opacities,
                       "canonical.sh": c.sh,
                       "bounds_min": f.bounds_min, "bounds_max": f.bounds_max})
        meta["degree"] = c.degree
        for hname, head in (("dx", f.head_dx), ("dr", f.head_dr), ("ds", f.head_ds)):
            mlp_entry(head, f"head.{hname}", arrays, meta["activations"])
    elif isinstance(gen, LbsAvatarGenerator):
        kind = "lbs"
        r = gen.rig
        c = r.canonical
        arrays.update({"canonical.positions": c.positions,
                       "canonical.scales": c.scales,
                       "canonical.rotations": c.rotations,
                       "canonical.opacities": c.opacities,
                       "canonical.sh": c.sh,
                       "rest_local": r.rest_local,
                       "skin_weights": r.skin_weights})
        meta["degree"] = c.degree
        meta["parent"] = r.parent.tolist()
    else:
        raise InvalidInputError(f"cannot serialize generator {type(gen).__name__}")
    return kind, meta, arrays


def save_fixture(gen: Generator, path: str) -> None:
    """Write descriptor JSON at `path` and the weight container beside it."""
    kind, meta, arrays = _collect_arrays(gen)
    bin_name = os.path.splitext(os.path.basename(path))[0] + ".bin"
    payload = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes()
                       for a in arrays.values())
    desc = {"kind": kind, "weights": bin_name,
            "arrays": [{"name": n, "shape": list(np.shape(a))}
                       for n, a in arrays.items()],
            **meta}
    with open(os.path.join(os.path.dirname(path) or ".", bin_name), "wb") as f:
        f.write(payload)
    with open(path, "w") as f:
        json.dump(desc, f, indent=1)


def _rebuild_mlp(arrays, activations, prefix) -> MlpParams:
    layers = []
    for i, act in enumerate(activations[prefix]):
        layers.append((arrays[f"{prefix}.{i}.weight"],
                       arrays[f"{prefix}.{i}.bias"], act))
    return MlpParams(layers)


def load_fixture(path: str) -> Generator:
    """Load a generator fixture from its JSON descriptor."""
    try:
        with open(path) as f:
            desc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise AssetParseError(f"cannot read fixture descriptor: {e}") from e
    bin_path = os.path.join(os.path.dirname(path) or ".", desc["weights"])
    try:
        raw = np.fromfile(bin_path, dtype="<f4")
    except OSError as e:
        raise AssetParseError(f"cannot read weight container: {e}") from e
    arrays = {}
    offset = 0
    for entry in desc["arrays"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape)) if shape else 1
        if offset + n > raw.size:
            raise BoundsError(f"weight container truncated at {entry['name']!r}")
        arrays[entry["name"]] = raw[offset:offset + n].reshape(shape).astype(np.float64)
        offset += n
    acts = desc.get("activations", {})
    kind = desc.get("kind")

    def cloud(prefix=""):
        degree = int(desc["degree"])
        return GaussianCloud(arrays[prefix + "positions"], arrays[prefix + "scales"],
                             arrays[prefix + "rotations"], arrays[prefix + "opacities"],
                             arrays[prefix + "sh"], degree)

    if kind == "static":
        return StaticGenerator(cloud())
    if kind == "anchor_mlp":
        anchor_set = AnchorSet(arrays["anchor_positions"], arrays["anchor_scales"],
                               arrays["features"], int(desc["offsets_per_anchor"]))
        heads = {name: _rebuild_mlp(arrays, acts, f"head.{name}")
                 for name in ("offset", "opacity", "cov", "color")}
        return AnchorMlpGenerator(anchor_set, heads)
    if kind == "hexplane":
        field = HexPlaneField(
            planes={name: arrays[f"plane.{name}"] for name in PLANE_ORDER},
            canonical=cloud("canonical."),
            head_dx=_rebuild_mlp(arrays, acts, "head.dx"),
            head_dr=_rebuild_mlp(arrays, acts, "head.dr"),
            head_ds=_rebuild_mlp(arrays, acts, "head.ds"),
            bounds_min=arrays["bounds_min"], bounds_max=arrays["bounds_max"])
        return HexPlaneGenerator(field)
    if kind == "lbs":
        rig = AvatarRig(canonical=cloud("canonical."),
                        parent=np.asarray(desc["parent"], dtype=np.int64),
                        rest_local=arrays["rest_local"],
                        skin_weights=arrays["skin_weights"])
        return LbsAvatarGenerator(rig)
    raise AssetParseError(f"unknown fixture kind {kind!r}")
