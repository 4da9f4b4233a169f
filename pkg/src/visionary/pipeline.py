"""Per-frame render pipeline: preprocess, depth sort, prepass, draw.

The frame flow mirrors a GPU splat renderer on the CPU: every instance's
Gaussians are transformed, culled, and projected into one global splat
accumulator; a stable LSD radix sort over order-preserving depth keys
yields the global back-to-front order; an optional mesh depth prepass
gates splat fragments; sorted splats are alpha-composited with
premultiplied "over" blending. A brute-force per-pixel front-to-back
oracle (reference_composite) checks the fast path.

All math runs in float64; fp16 only ever enters through packed buffers.
Splat footprints are cut at 3 sigma and fragment weights below 1/255 are
dropped, in both the fast path and the oracle, so the two are comparable
at fp32 tolerance.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

from .assets import MeshAsset, PackedSplatBuffer, unpack_buffer
from .errors import (ContractViolationError, InvalidDepthError,
                     InvalidInputError)
from .generators import GaussianBatch, Generator, GeneratorInputs
from .splatmath import (Camera, GaussianCloud, cov2d_project_batch,
                        covariance3d_batch, eigen2x2_batch, eval_sh_batch,
                        sym3_to_matrix)

ALPHA_MIN = 1.0 / 255.0      # opacity cull threshold in preprocess
WEIGHT_FLOOR = 1.0 / 255.0   # per-fragment weight cutoff
FOOTPRINT_SIGMA = 3.0        # splat quad extent in standard deviations
FRUSTUM_MARGIN = 1.3         # clip-bound guard band for culling


def _configure_threads():
    cap = os.environ.get("VISIONARY_THREADS")
    if cap:
        try:
            n = max(1, int(cap))
        except ValueError:
            raise InvalidInputError(f"VISIONARY_THREADS={cap!r} is not an integer")
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


@dataclass
class FrameStats:
    """Per-frame stage timing breakdown plus splat counts."""
    generate_ms: float = 0.0
    preprocess_ms: float = 0.0
    sort_ms: float = 0.0
    draw_ms: float = 0.0
    total_ms: float = 0.0
    splats_in: int = 0
    splats_visible: int = 0

    def to_dict(self) -> dict:
        return {"generate_ms": self.generate_ms,
                "preprocess_ms": self.preprocess_ms,
                "sort_ms": self.sort_ms, "draw_ms": self.draw_ms,
                "total_ms": self.total_ms, "splats_in": self.splats_in,
                "splats_visible": self.splats_visible}


@dataclass
class ModelInstance:
    """One scene entry: a splat source plus its world transform."""
    source: object            # PackedSplatBuffer | GaussianCloud | Generator
    transform: np.ndarray = field(default_factory=lambda: np.eye(4))
    model_id: int = 0

    def __post_init__(self):
        t = np.asarray(self.transform, dtype=np.float64).reshape(4, 4)
        if not np.all(np.isfinite(t)):
            raise InvalidInputError("non-finite instance transform")
        if abs(np.linalg.det(t[:3, :3])) < 1e-12:
            raise InvalidInputError("instance transform is not invertible")
        self.transform = t


class Splat2DBatch:
    """Struct-of-arrays list of projected screen-space splats."""

    __slots__ = ("center_px", "depth", "axis1", "axis2", "rgba", "origin")

    def __init__(self, center_px, depth, axis1, axis2, rgba, origin):
        self.center_px = center_px    # (N,2) pixel center
        self.depth = depth            # (N,)  NDC depth
        self.axis1 = axis1            # (N,2) major axis, pixel units
        self.axis2 = axis2            # (N,2) minor axis, pixel units
        self.rgba = rgba              # (N,4) color + opacity
        self.origin = origin          # (N,2) (model_id, gaussian_index)

    def __len__(self):
        return len(self.depth)

    def take(self, perm: np.ndarray) -> "Splat2DBatch":
        return Splat2DBatch(self.center_px[perm], self.depth[perm],
                            self.axis1[perm], self.axis2[perm],
                            self.rgba[perm], self.origin[perm])

    @classmethod
    def empty(cls) -> "Splat2DBatch":
        return cls(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)),
                   np.zeros((0, 2)), np.zeros((0, 4)),
                   np.zeros((0, 2), dtype=np.int64))

    @classmethod
    def concat(cls, parts) -> "Splat2DBatch":
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(*[np.concatenate([getattr(p, name) for p in parts])
                     for name in cls.__slots__])


@dataclass
class ResolvedModel:
    """Per-frame splat source in the uniform form preprocess consumes."""
    positions: np.ndarray     # (N,3) model space
    cov6: np.ndarray          # (N,6) model space
    opacity: np.ndarray       # (N,)
    color: np.ndarray         # (N,B,3) SH or (N,3) raw RGB
    color_space: str
    degree: int


class ResolvedView:
    """Adapter letting preprocess_instance consume an already-resolved model."""

    def __init__(self, model: ResolvedModel):
        self.model = model


def resolve_source(source, inputs: GeneratorInputs | None = None) -> ResolvedModel:
    """Bring any instance source kind into ResolvedModel form."""
    if isinstance(source, ResolvedView):
        return source.model
    if isinstance(source, Generator):
        batch = source.generate(inputs if inputs is not None else GeneratorInputs())
        if batch.cov_upper is not None:
            cov6 = batch.cov_upper
        else:
            cov6 = covariance3d_batch(batch.scale, batch.rotation)
        return ResolvedModel(batch.positions, cov6, batch.opacity, batch.color,
                             batch.color_space, batch.degree)
    if isinstance(source, GaussianBatch):
        cov6 = source.cov_upper if source.cov_upper is not None \
            else covariance3d_batch(source.scale, source.rotation)
        return ResolvedModel(source.positions, cov6, source.opacity,
                             source.color, source.color_space, source.degree)
    if isinstance(source, PackedSplatBuffer):
        pos, op, cov6, color = unpack_buffer(source)
        space = "rgb" if source.raw_rgb else "sh"
        return ResolvedModel(pos.astype(np.float64), cov6.astype(np.float64),
                             op.astype(np.float64), color.astype(np.float64),
                             space, source.degree)
    if isinstance(source, GaussianCloud):
        cov6 = covariance3d_batch(source.scales, source.rotations)
        return ResolvedModel(source.positions.astype(np.float64), cov6,
                             source.opacities.astype(np.float64),
                             source.sh.astype(np.float64), "sh", source.degree)
    raise InvalidInputError(f"unsupported instance source {type(source).__name__}")


def preprocess_instance(inst: ModelInstance, cam: Camera, out: list,
                        inputs: GeneratorInputs | None = None,
                        alpha_min: float = ALPHA_MIN,
                        margin: float = FRUSTUM_MARGIN) -> int:
    """Project one instance into the splat accumulator; returns appended count.

    Rejection (behind near plane, outside frustum with margin, opacity
    below alpha_min) is a normal outcome. Appended splats keep
    (model_id, gaussian_index) order.
    """
    model = resolve_source(inst.source, inputs)
    n = len(model.positions)
    if n == 0:
        return 0
    a = inst.transform[:3, :3]
    world = model.positions @ a.T + inst.transform[:3, 3]
    # Covariance under the affine instance transform: A Sigma A^T.
    sig_w = np.einsum("ij,njk,lk->nil", a, sym3_to_matrix(model.cov6), a)

    r, t = cam.view[:3, :3], cam.view[:3, 3]
    p_cam = world @ r.T + t
    zc = p_cam[:, 2]
    vis = zc < -cam.near
    alpha = np.asarray(model.opacity, dtype=np.float64)
    vis &= alpha >= alpha_min
    if not np.any(vis):
        return 0
    # Clip-space transform on the survivors only.
    ndc_x = cam.proj[0, 0] * p_cam[:, 0] / -zc
    ndc_y = cam.proj[1, 1] * p_cam[:, 1] / -zc
    ndc_z = (cam.proj[2, 2] * p_cam[:, 2] + cam.proj[2, 3]) / -zc
    vis &= (np.abs(ndc_x) <= margin) & (np.abs(ndc_y) <= margin) \
        & (ndc_z >= 0.0) & (ndc_z <= 1.0)
    idx = np.nonzero(vis)[0]
    if idx.size == 0:
        return 0

    cov6_w = np.stack([sig_w[idx, 0, 0], sig_w[idx, 0, 1], sig_w[idx, 0, 2],
                       sig_w[idx, 1, 1], sig_w[idx, 1, 2], sig_w[idx, 2, 2]], axis=1)
    s2 = cov2d_project_batch(cov6_w, p_cam[idx], cam)
    lam1, lam2, v1, v2 = eigen2x2_batch(s2)
    # Pixel frame: x right, y down; the projection Jacobian's y points up.
    ax1 = np.sqrt(lam1)[:, None] * np.stack([v1[:, 0], -v1[:, 1]], axis=1)
    ax2 = np.sqrt(lam2)[:, None] * np.stack([v2[:, 0], -v2[:, 1]], axis=1)
    center = np.stack([(ndc_x[idx] + 1.0) * 0.5 * cam.width,
                       (1.0 - ndc_y[idx]) * 0.5 * cam.height], axis=1)

    if model.color_space == "rgb":
        rgb = np.clip(model.color[idx], 0.0, 1.0)
    else:
        dirs = world[idx] - cam.position
        dn = np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = dirs / np.where(dn == 0, 1.0, dn)
        rgb = eval_sh_batch(model.color[idx], model.degree, dirs)
    rgba = np.concatenate([rgb, alpha[idx, None]], axis=1)
    origin = np.stack([np.full(idx.size, inst.model_id, dtype=np.int64),
                       idx.astype(np.int64)], axis=1)
    out.append(Splat2DBatch(center, ndc_z[idx], ax1, ax2, rgba, origin))
    return idx.size


def encode_depth_key(z) -> np.ndarray | int:
    """Order-preserving u32 encoding of NDC depth: f32 bits, sign flipped."""
    arr = np.asarray(z, dtype=np.float32)
    if np.any(np.isnan(arr)):
        raise InvalidDepthError("NaN depth")
    if np.any(arr < 0):
        raise InvalidDepthError("negative depth is not encodable")
    keys = arr.view(np.uint32) ^ np.uint32(0x80000000)
    if np.isscalar(z) or arr.ndim == 0:
        return int(keys)
    return keys


@njit(cache=True)
def _radix_sort_u32(keys):
    n = keys.size
    perm = np.arange(n, dtype=np.int64)
    tmp = np.empty(n, dtype=np.int64)
    for p in range(4):
        shift = 8 * p
        counts = np.zeros(256, dtype=np.int64)
        for i in range(n):
            counts[(keys[perm[i]] >> shift) & 0xFF] += 1
        offsets = np.zeros(256, dtype=np.int64)
        acc = 0
        for d in range(256):
            offsets[d] = acc
            acc += counts[d]
        for i in range(n):
            d = (keys[perm[i]] >> shift) & 0xFF
            tmp[offsets[d]] = perm[i]
            offsets[d] += 1
        perm, tmp = tmp, perm
    return perm


def radix_sort(keys: np.ndarray) -> np.ndarray:
    """Stable LSD radix sort (8-bit digits, 4 passes) over u32 words.

    Returns the permutation that orders keys non-decreasingly; equal keys
    keep input order.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint32)
    return _radix_sort_u32(keys)


def mesh_depth_prepass(mesh: MeshAsset | None, cam: Camera) -> np.ndarray:
    """Nearest-triangle NDC depth per pixel; uncovered pixels hold 1.0.

    Edge-function rasterization with a top-left fill rule; triangles with
    a vertex at/behind the near plane are skipped (no clipping).
    """
    depth = np.ones((cam.height, cam.width))
    if mesh is None or len(mesh.triangles) == 0:
        return depth
    r, t = cam.view[:3, :3], cam.view[:3, 3]
    p_cam = mesh.vertices @ r.T + t
    zc = p_cam[:, 2]
    px = cam.proj[0, 0] * p_cam[:, 0] / -zc
    py = cam.proj[1, 1] * p_cam[:, 1] / -zc
    sx = (px + 1.0) * 0.5 * cam.width
    sy = (1.0 - py) * 0.5 * cam.height
    sz = (cam.proj[2, 2] * zc + cam.proj[2, 3]) / -zc

    for tri in mesh.triangles:
        if np.any(zc[tri] >= -cam.near):
            continue
        x0, x1, x2 = sx[tri]
        y0, y1, y2 = sy[tri]
        z0, z1, z2 = sz[tri]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        if area < 0.0:
            x1, x2, y1, y2, z1, z2 = x2, x1, y2, y1, z2, z1
            area = -area
        c0 = max(0, int(np.floor(min(x0, x1, x2) - 0.5)))
        c1 = min(cam.width - 1, int(np.ceil(max(x0, x1, x2) - 0.5)))
        r0 = max(0, int(np.floor(min(y0, y1, y2) - 0.5)))
        r1 = min(cam.height - 1, int(np.ceil(max(y0, y1, y2) - 0.5)))
        if c1 < c0 or r1 < r0:
            continue
        cols = np.arange(c0, c1 + 1) + 0.5
        rows = np.arange(r0, r1 + 1) + 0.5
        pxg, pyg = np.meshgrid(cols, rows)

        def edge(ax, ay, bx, by):
            w = (bx - ax) * (pyg - ay) - (by - ay) * (pxg - ax)
            # Top-left rule (y grows downward): top edges run left along a
            # horizontal line, left edges go upward.
            dx, dy = bx - ax, by - ay
            top_left = (dy == 0 and dx < 0) or dy > 0
            return w > 0 if not top_left else w >= 0, w

        m0, w0 = edge(x1, y1, x2, y2)
        m1, w1 = edge(x2, y2, x0, y0)
        m2, w2 = edge(x0, y0, x1, y1)
        inside = m0 & m1 & m2
        if not np.any(inside):
            continue
        z = (w0 * z0 + w1 * z1 + w2 * z2) / area
        inside &= (z >= 0.0) & (z <= 1.0)
        tile = depth[r0:r1 + 1, c0:c1 + 1]
        np.minimum(tile, np.where(inside, z, 1.0), out=tile)
    return depth


@njit(parallel=True, cache=True)
def _raster_rows(rows_ptr, entries, center, depth, ax1, ax2, rgba,
                 extent_x, mesh_depth, out, w_floor, cutoff2):
    height, width = out.shape[0], out.shape[1]
    for r in prange(height):
        py = r + 0.5
        for e in range(rows_ptr[r], rows_ptr[r + 1]):
            q = entries[e]
            cx = center[q, 0]
            cy = center[q, 1]
            ex = extent_x[q]
            c_lo = int(np.floor(cx - ex))
            c_hi = int(np.ceil(cx + ex))
            if c_lo < 0:
                c_lo = 0
            if c_hi > width - 1:
                c_hi = width - 1
            a1x, a1y = ax1[q, 0], ax1[q, 1]
            a2x, a2y = ax2[q, 0], ax2[q, 1]
            n1 = a1x * a1x + a1y * a1y
            n2 = a2x * a2x + a2y * a2y
            dy = py - cy
            z = depth[q]
            alpha = rgba[q, 3]
            for c in range(c_lo, c_hi + 1):
                dx = c + 0.5 - cx
                u1 = (dx * a1x + dy * a1y) / n1
                u2 = (dx * a2x + dy * a2y) / n2
                d2 = u1 * u1 + u2 * u2
                if d2 > cutoff2:
                    continue
                w = alpha * np.exp(-0.5 * d2)
                if w < w_floor:
                    continue
                if z > mesh_depth[r, c]:
                    continue
                one_w = 1.0 - w
                out[r, c, 0] = w * rgba[q, 0] + one_w * out[r, c, 0]
                out[r, c, 1] = w * rgba[q, 1] + one_w * out[r, c, 1]
                out[r, c, 2] = w * rgba[q, 2] + one_w * out[r, c, 2]


def _footprint_extents(splats: Splat2DBatch):
    a1, a2 = splats.axis1, splats.axis2
    ex = FOOTPRINT_SIGMA * (np.abs(a1[:, 0]) + np.abs(a2[:, 0]))
    ey = FOOTPRINT_SIGMA * (np.abs(a1[:, 1]) + np.abs(a2[:, 1]))
    return ex, ey


def rasterize_sorted(splats: Splat2DBatch, mesh_depth: np.ndarray,
                     background, *, debug_check: bool = True) -> np.ndarray:
    """Back-to-front "over" compositing of depth-descending splats.

    Fragments outside 3 sigma, below the weight floor, or behind the mesh
    depth are skipped. Parallel over image rows; splat order per pixel is
    the input order, so output is independent of thread count.
    """
    height, width = mesh_depth.shape
    if debug_check and len(splats) > 1 \
            and np.any(np.diff(splats.depth.astype(np.float32)) > 0):
        raise ContractViolationError("rasterize_sorted needs depth-descending input")
    out = np.empty((height, width, 3))
    out[:] = np.asarray(background, dtype=np.float64).reshape(3)
    n = len(splats)
    if n == 0:
        return out
    _configure_threads()
    ex, ey = _footprint_extents(splats)
    cy = splats.center_px[:, 1]
    r0 = np.clip(np.floor(cy - ey).astype(np.int64), 0, height - 1)
    r1 = np.clip(np.ceil(cy + ey).astype(np.int64), -1, height - 1)
    r1 = np.maximum(r1, r0 - 1)
    # Degenerate guard: splats fully above/below the viewport get no rows.
    off = (cy + ey < 0) | (cy - ey > height)
    counts = np.where(off, 0, r1 - r0 + 1)
    total = int(counts.sum())
    if total == 0:
        return out
    splat_of = np.repeat(np.arange(n, dtype=np.int64), counts)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    intra = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    row_of = np.repeat(r0, counts) + intra
    order = np.argsort(row_of, kind="stable")
    entries = splat_of[order]
    rows_sorted = row_of[order]
    rows_ptr = np.searchsorted(rows_sorted, np.arange(height + 1))
    _raster_rows(rows_ptr, entries,
                 np.ascontiguousarray(splats.center_px),
                 np.ascontiguousarray(splats.depth),
                 np.ascontiguousarray(splats.axis1),
                 np.ascontiguousarray(splats.axis2),
                 np.ascontiguousarray(splats.rgba),
                 ex, mesh_depth, out, WEIGHT_FLOOR,
                 FOOTPRINT_SIGMA * FOOTPRINT_SIGMA)
    return out


def reference_composite(splats: Splat2DBatch, mesh_depth: np.ndarray,
                        background) -> np.ndarray:
    """Brute-force front-to-back compositing oracle.

    Per pixel: C = sum_i w_i T_i c_i with T_i the product of (1 - w_j)
    over nearer splats, plus residual transmittance times background.
    Applies the same footprint cutoff, weight floor, and mesh depth rule
    as the fast path, but composites in exact per-pixel depth order.
    """
    height, width = mesh_depth.shape
    color = np.zeros((height, width, 3))
    trans = np.ones((height, width))
    order = np.argsort(splats.depth, kind="stable")   # front-to-back
    ex, ey = _footprint_extents(splats)
    cutoff2 = FOOTPRINT_SIGMA * FOOTPRINT_SIGMA
    for q in order:
        cx, cy = splats.center_px[q]
        c0 = max(0, int(np.floor(cx - ex[q])))
        c1 = min(width - 1, int(np.ceil(cx + ex[q])))
        r0 = max(0, int(np.floor(cy - ey[q])))
        r1 = min(height - 1, int(np.ceil(cy + ey[q])))
        if c1 < c0 or r1 < r0:
            continue
        xs = np.arange(c0, c1 + 1) + 0.5 - cx
        ys = np.arange(r0, r1 + 1) + 0.5 - cy
        dx, dy = np.meshgrid(xs, ys)
        a1, a2 = splats.axis1[q], splats.axis2[q]
        u1 = (dx * a1[0] + dy * a1[1]) / (a1 @ a1)
        u2 = (dx * a2[0] + dy * a2[1]) / (a2 @ a2)
        d2 = u1 * u1 + u2 * u2
        w = splats.rgba[q, 3] * np.exp(-0.5 * d2)
        w[(d2 > cutoff2) | (w < WEIGHT_FLOOR)
          | (splats.depth[q] > mesh_depth[r0:r1 + 1, c0:c1 + 1])] = 0.0
        tile_t = trans[r0:r1 + 1, c0:c1 + 1]
        color[r0:r1 + 1, c0:c1 + 1] += (tile_t * w)[..., None] * splats.rgba[q, :3]
        tile_t *= 1.0 - w
    return color + trans[..., None] * np.asarray(background, dtype=np.float64)


# ---------------------------------------------------------------------------
# Post-processing hook
# ---------------------------------------------------------------------------

def postprocess_apply(img: np.ndarray, chain) -> np.ndarray:
    """Apply filters in order. Filters: ("identity",), ("gamma", g),
    ("conv3x3", kernel). Convolution clamps to edge."""
    out = np.asarray(img, dtype=np.float64)
    for filt in chain:
        name = filt[0]
        if name == "identity":
            continue
        if name == "gamma":
            g = float(filt[1])
            if g <= 0:
                raise InvalidInputError("gamma must be positive")
            out = np.clip(out, 0.0, 1.0) ** (1.0 / g)
        elif name == "conv3x3":
            k = np.asarray(filt[1], dtype=np.float64)
            if k.size == 0:
                raise InvalidInputError("empty convolution kernel")
            k = k.reshape(3, 3)
            padded = np.pad(out, ((1, 1), (1, 1), (0, 0)), mode="edge")
            acc = np.zeros_like(out)
            for i in range(3):
                for j in range(3):
                    acc += k[i, j] * padded[i:i + out.shape[0], j:j + out.shape[1]]
            out = acc
        else:
            raise InvalidInputError(f"unknown filter {name!r}")
    return out


def parse_filter_token(token: str):
    """CLI/service filter tokens: identity | gamma:<g> | blur | sharpen."""
    if token == "identity":
        return ("identity",)
    if token.startswith("gamma:"):
        try:
            return ("gamma", float(token[6:]))
        except ValueError:
            raise InvalidInputError(f"bad gamma token {token!r}")
    if token == "blur":
        return ("conv3x3", np.full((3, 3), 1.0 / 9.0))
    if token == "sharpen":
        return ("conv3x3", np.array([[0, -1, 0], [-1, 5, -1], [0, -1, 0]], dtype=float))
    raise InvalidInputError(f"unknown filter token {token!r}")


# ---------------------------------------------------------------------------
# Whole-frame driver
# ---------------------------------------------------------------------------

@dataclass
class Scene:
    instances: list
    mesh: MeshAsset | None = None
    background: tuple = (0.0, 0.0, 0.0)


@dataclass
class FrameResult:
    image: np.ndarray
    stats: FrameStats
    keys: np.ndarray          # depth keys in compaction order
    permutation: np.ndarray   # ordering actually drawn (ascending depth)


def render_frame(scene: Scene, cam: Camera,
                 inputs: GeneratorInputs | None = None,
                 strategy=None, filters=()) -> FrameResult:
    """Run the full per-frame pipeline and collect stage timings."""
    if not scene.instances:
        raise InvalidInputError("scene has no instances")
    if strategy is None:
        from .sortlab import GlobalSort
        strategy = GlobalSort()
    inputs = inputs if inputs is not None else GeneratorInputs()
    t0 = time.perf_counter()

    resolved = []
    splats_in = 0
    for inst in scene.instances:
        model = resolve_source(inst.source, inputs)
        splats_in += len(model.positions)
        resolved.append((inst, model))
    t1 = time.perf_counter()

    acc: list = []
    for inst, model in resolved:
        preprocess_instance(
            ModelInstance(source=ResolvedView(model), transform=inst.transform,
                          model_id=inst.model_id), cam, acc)
    splats = Splat2DBatch.concat(acc)
    t2 = time.perf_counter()

    keys = encode_depth_key(splats.depth) if len(splats) else np.zeros(0, np.uint32)
    perm = strategy.order(keys)
    t3 = time.perf_counter()

    mesh_depth = mesh_depth_prepass(scene.mesh, cam)
    image = rasterize_sorted(splats.take(perm[::-1]), mesh_depth,
                             scene.background, debug_check=False)
    if filters:
        image = postprocess_apply(image, filters)
    t4 = time.perf_counter()

    stats = FrameStats(
        generate_ms=(t1 - t0) * 1e3, preprocess_ms=(t2 - t1) * 1e3,
        sort_ms=(t3 - t2) * 1e3, draw_ms=(t4 - t3) * 1e3,
        total_ms=(t4 - t0) * 1e3, splats_in=splats_in,
        splats_visible=len(splats))
    return FrameResult(image=image, stats=stats, keys=keys, permutation=perm)


def image_to_rgba8(img: np.ndarray) -> np.ndarray:
    """Quantize a float image in [0,1] to (H,W,4) uint8 with opaque alpha."""
    rgb = np.clip(np.asarray(img), 0.0, 1.0)
    out = np.empty(rgb.shape[:2] + (4,), dtype=np.uint8)
    out[..., :3] = np.round(rgb * 255.0).astype(np.uint8)
    out[..., 3] = 255
    return out
