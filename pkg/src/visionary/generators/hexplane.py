"""Six-plane spatiotemporal deformation field over canonical Gaussians.

The 4D field is factorized into 2D feature grids over the coordinate pairs
xy, xz, yz, xt, yt, zt. A query (x,y,z,t) bilinearly samples each plane
and concatenates the six feature vectors; small decoder heads map the
concatenated feature to a position offset, a rotation residual, and a
log-scale residual applied to the canonical Gaussians.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..splatmath import GaussianCloud
from .base import GaussianBatch, Generator, GeneratorInputs
from .mlp import MlpParams, mlp_forward

PLANE_ORDER = ("xy", "xz", "yz", "xt", "yt", "zt")
# (row coordinate, column coordinate) per plane; 0..2 = x,y,z, 3 = t.
_PLANE_AXES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2),
               "xt": (0, 3), "yt": (1, 3), "zt": (2, 3)}


@dataclass
class HexPlaneField:
    """Feature planes + canonical Gaussians + per-attribute decoder heads."""
    planes: dict                    # name -> (H,W,F) array
    canonical: GaussianCloud
    head_dx: MlpParams              # 6F -> 3
    head_dr: MlpParams              # 6F -> 4
    head_ds: MlpParams              # 6F -> 3
    bounds_min: np.ndarray          # (3,) scene bounds for normalizing xyz
    bounds_max: np.ndarray

    def __post_init__(self):
        widths = set()
        for name in PLANE_ORDER:
            if name not in self.planes:
                raise InvalidInputError(f"missing plane {name!r}")
            p = np.asarray(self.planes[name], dtype=np.float64)
            if p.ndim != 3 or not np.all(np.isfinite(p)):
                raise InvalidInputError(f"plane {name!r} must be a finite (H,W,F) grid")
            self.planes[name] = p
            widths.add(p.shape[2])
        if len(widths) != 1:
            raise InvalidInputError(f"planes disagree on feature width: {sorted(widths)}")
        self.feature_width = widths.pop()
        for head, dim in ((self.head_dx, 3), (self.head_dr, 4), (self.head_ds, 3)):
            if head.in_dim != 6 * self.feature_width:
                raise InvalidInputError(
                    f"decoder input width {head.in_dim} != 6F = {6 * self.feature_width}")
            if head.out_dim != dim:
                raise InvalidInputError(f"decoder output width {head.out_dim} != {dim}")
        self.bounds_min = np.asarray(self.bounds_min, dtype=np.float64).reshape(3)
        self.bounds_max = np.asarray(self.bounds_max, dtype=np.float64).reshape(3)
        if np.any(self.bounds_max <= self.bounds_min):
            raise InvalidInputError("degenerate scene bounds")


def _bilinear(grid: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sample a (H,W,F) grid at normalized (u,v) in [0,1]; u indexes rows."""
    h, w, _ = grid.shape
    ru = np.clip(u, 0.0, 1.0) * (h - 1)
    cv = np.clip(v, 0.0, 1.0) * (w - 1)
    r0 = np.minimum(np.floor(ru).astype(np.intp), h - 2 if h > 1 else 0)
    c0 = np.minimum(np.floor(cv).astype(np.intp), w - 2 if w > 1 else 0)
    fr = (ru - r0)[..., None]
    fc = (cv - c0)[..., None]
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    return ((1 - fr) * (1 - fc) * grid[r0, c0] + (1 - fr) * fc * grid[r0, c1]
            + fr * (1 - fc) * grid[r1, c0] + fr * fc * grid[r1, c1])


def hexplane_sample(field: HexPlaneField, x, y, z, t) -> np.ndarray:
    """Concatenated 6F feature at scene-normalized (x,y,z) and time t.

    Coordinates are clamped to [0,1]; plane order is fixed to
    xy,xz,yz,xt,yt,zt.
    """
    coords = np.stack([np.atleast_1d(np.asarray(c, dtype=np.float64))
                       for c in (x, y, z, t)], axis=-1)
    feats = [_bilinear(field.planes[name], coords[..., a], coords[..., b])
             for name, (a, b) in ((n, _PLANE_AXES[n]) for n in PLANE_ORDER)]
    out = np.concatenate(feats, axis=-1)
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return out[0]
    return out


class HexPlaneGenerator(Generator):
    """Warps canonical Gaussians by the field sampled at (x,y,z,t)."""

    def __init__(self, field: HexPlaneField):
        self.field = field

    def _generate(self, inputs: GeneratorInputs) -> GaussianBatch:
        field = self.field
        can = field.canonical
        pos = can.positions.astype(np.float64)
        span = field.bounds_max - field.bounds_min
        norm = np.clip((pos - field.bounds_min) / span, 0.0, 1.0)
        t = np.full(len(can), inputs.time)
        feat = hexplane_sample(field, norm[:, 0], norm[:, 1], norm[:, 2], t)

        dx = mlp_forward(field.head_dx, feat)
        dr = mlp_forward(field.head_dr, feat)
        ds = mlp_forward(field.head_ds, feat)

        positions = pos + dx
        rot = can.rotations.astype(np.float64) + dr
        n = np.linalg.norm(rot, axis=1, keepdims=True)
        rot = rot / np.where(n == 0, 1.0, n)
        scale = can.scales.astype(np.float64) * np.exp(ds)

        return GaussianBatch(positions, can.opacities, can.sh,
                             scale=scale, rotation=rot,
                             color_space="sh", degree=can.degree)
