"""Tiny dense MLPs and the anchor-based neural Gaussian generator.

Anchors carry a shared feature vector; per-frame, each anchor's feature is
concatenated with the view direction and pushed through four attribute
heads to decode k candidate Gaussians (offsets, opacities, scale+rotation,
colors). Candidates whose sigmoid opacity falls at or below ALPHA_PRUNE
are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .base import ALPHA_PRUNE, GaussianBatch, Generator, GeneratorInputs

_ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "sigmoid": lambda x: 1.0 / (1.0 + np.exp(-x)),
    "tanh": np.tanh,
    "identity": lambda x: x,
}


@dataclass
class MlpParams:
    """Ordered dense layers: (weight (out,in), bias (out,), activation tag)."""
    layers: list

    def __post_init__(self):
        prev = None
        for i, (w, b, act) in enumerate(self.layers):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise InvalidInputError(f"layer {i}: weight/bias shape mismatch")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError(f"layer {i}: non-finite parameters")
            if act not in _ACTIVATIONS:
                raise InvalidInputError(f"layer {i}: unknown activation {act!r}")
            if prev is not None and w.shape[1] != prev:
                raise InvalidInputError(
                    f"layer {i}: input dim {w.shape[1]} != previous output {prev}")
            prev = w.shape[0]
            self.layers[i] = (w, b, act)

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[0]


def mlp_forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Sequential affine + activation evaluation; x may be batched (...,in)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.in_dim:
        raise InvalidInputError(
            f"input width {x.shape[-1]} != first layer dim {params.in_dim}")
    for w, b, act in params.layers:
        x = _ACTIVATIONS[act](x @ w.T + b)
    return x


@dataclass
class AnchorSet:
    """Anchor positions/scales with shared features; k candidates per anchor."""
    anchor_positions: np.ndarray   # (A,3)
    anchor_scales: np.ndarray      # (A,3)
    features: np.ndarray           # (A,F)
    offsets_per_anchor: int

    def __post_init__(self):
        self.anchor_positions = np.asarray(self.anchor_positions, dtype=np.float64).reshape(-1, 3)
        a = len(self.anchor_positions)
        self.anchor_scales = np.asarray(self.anchor_scales, dtype=np.float64).reshape(a, 3)
        self.features = np.asarray(self.features, dtype=np.float64).reshape(a, -1)
        if self.offsets_per_anchor < 1:
            raise InvalidInputError("offsets_per_anchor must be >= 1")
        for arr in (self.anchor_positions, self.anchor_scales, self.features):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError("non-finite anchor data")


class AnchorMlpGenerator(Generator):
    """Decodes k neural Gaussians per anchor from (feature, view_dir) heads.

    heads: dict with 'offset' (k*3), 'opacity' (k), 'cov' (k*7: 3 log-scale
    + 4 rotation), 'color' (k*3); each head's input is concat(f_i, d_view).
    """

    def __init__(self, anchors: AnchorSet, heads: dict, alpha_prune: float = ALPHA_PRUNE):
        k = anchors.offsets_per_anchor
        expected = {"offset": 3 * k, "opacity": k, "cov": 7 * k, "color": 3 * k}
        for name, width in expected.items():
            if name not in heads:
                raise InvalidInputError(f"missing head {name!r}")
            if heads[name].out_dim != width:
                raise InvalidInputError(
                    f"head {name!r} output width {heads[name].out_dim} != {width}")
            in_dim = anchors.features.shape[1] + 3
            if heads[name].in_dim != in_dim:
                raise InvalidInputError(
                    f"head {name!r} input width {heads[name].in_dim} != {in_dim}")
        self.anchors = anchors
        self.heads = heads
        self.alpha_prune = float(alpha_prune)

    def _generate(self, inputs: GeneratorInputs) -> GaussianBatch:
        anc = self.anchors
        a, k = len(anc.anchor_positions), anc.offsets_per_anchor
        feat = np.concatenate(
            [anc.features, np.broadcast_to(inputs.view_dir, (a, 3))], axis=1)

        offsets = mlp_forward(self.heads["offset"], feat).reshape(a, k, 3)
        raw_alpha = mlp_forward(self.heads["opacity"], feat).reshape(a, k)
        cov = mlp_forward(self.heads["cov"], feat).reshape(a, k, 7)
        colors = mlp_forward(self.heads["color"], feat).reshape(a, k, 3)

        positions = anc.anchor_positions[:, None, :] + offsets * anc.anchor_scales[:, None, :]
        alpha = 1.0 / (1.0 + np.exp(-raw_alpha))
        keep = alpha > self.alpha_prune

        scale = np.exp(cov[..., :3])
        rot = cov[..., 3:7]
        norm = np.linalg.norm(rot, axis=-1, keepdims=True)
        rot = np.where(norm > 1e-12, rot / np.where(norm == 0, 1.0, norm),
                       np.array([1.0, 0.0, 0.0, 0.0]))
        rgb = 1.0 / (1.0 + np.exp(-colors))

        return GaussianBatch(
            positions[keep], alpha[keep], rgb[keep],
            scale=scale[keep], rotation=rot[keep],
            color_space="rgb", degree=0)
