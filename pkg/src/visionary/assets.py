"""Asset parsing and half-precision splat packing.

Handles the de-facto binary splat PLY schema (with sigmoid/exp storage
activations applied at parse time), a Wavefront OBJ subset for occluder
meshes, and the word-packed fp16 buffer layout used by the renderer:

  pos_opacity: 2 u32 words per Gaussian (3 position halfs + 1 opacity half)
  cov6:        3 u32 words per Gaussian (upper-triangular covariance halfs)
  color:       ceil((degree+1)^2 * 3 / 2) words per Gaussian, zero-padded

The buffer also serializes to a flat container: 16-byte header (magic
"VSPK", version u32, count u32, degree u32, little-endian) followed by the
three word arrays in order. Version 1 stores SH colors, version 2 raw RGB.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (AssetParseError, BoundsError, InvalidInputError,
                     SchemaError, UnsupportedFormatError)
from .splatmath import GaussianCloud, covariance3d_batch

MAGIC = b"VSPK"

_PLY_DTYPES = {
    "float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8",
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "<i2", "int16": "<i2", "ushort": "<u2", "uint16": "<u2",
    "int": "<i4", "int32": "<i4", "uint": "<u4", "uint32": "<u4",
}

_REST_TO_DEGREE = {0: 0, 9: 1, 24: 2, 45: 3}


@dataclass
class PackedSplatBuffer:
    """Half-precision, word-packed GPU-style splat attribute buffer."""
    count: int
    degree: int
    pos_opacity: np.ndarray   # (count*2,)  uint32
    cov6: np.ndarray          # (count*3,)  uint32
    color: np.ndarray         # (count*color_words,) uint32
    raw_rgb: bool = False     # True: color block holds plain RGB, no SH offset

    @property
    def color_words(self) -> int:
        return _color_words(self.degree)


@dataclass
class MeshAsset:
    """Triangle mesh occluder: vertices, index triples, optional colors."""
    vertices: np.ndarray                 # (V,3) float64
    triangles: np.ndarray                # (T,3) int32
    vertex_colors: np.ndarray | None = None


def _color_words(degree: int) -> int:
    return ((degree + 1) ** 2 * 3 + 1) // 2


def _pack_halfs(values: np.ndarray) -> np.ndarray:
    """Pack a (N, 2k) float array into (N*k,) u32 words, two halfs per word."""
    with np.errstate(over="ignore"):
        h = values.astype(np.float16).view(np.uint16).astype(np.uint32)
    flat = h.reshape(-1, 2)
    return (flat[:, 0] | (flat[:, 1] << 16)).astype(np.uint32)


def _unpack_halfs(words: np.ndarray, cols: int) -> np.ndarray:
    """Inverse of _pack_halfs: (N*k,) words -> (N, cols) float32 (pad dropped)."""
    w = np.asarray(words, dtype=np.uint32)
    h = np.empty(w.size * 2, dtype=np.uint16)
    h[0::2] = w & 0xFFFF
    h[1::2] = w >> 16
    vals = h.view(np.float16).astype(np.float32)
    padded = -(-cols // 2) * 2
    return vals.reshape(-1, padded)[:, :cols]


def pack_buffer(sources, raw_rgb: bool = False) -> PackedSplatBuffer:
    """Build a PackedSplatBuffer from GaussianSource primitives.

    Covariance is computed from scale/rotation then cast to fp16; all
    sources must share one SH degree.
    """
    if isinstance(sources, GaussianCloud):
        cloud = sources
    else:
        sources = list(sources)
        degrees = {s.degree for s in sources}
        if len(degrees) > 1:
            raise InvalidInputError(f"mixed SH degrees in pack_buffer: {sorted(degrees)}")
        cloud = GaussianCloud.from_sources(sources)
    n = len(cloud)
    if n == 0:
        return PackedSplatBuffer(0, cloud.degree,
                                 np.zeros(0, np.uint32), np.zeros(0, np.uint32),
                                 np.zeros(0, np.uint32), raw_rgb)
    pos_op = np.concatenate([cloud.positions, cloud.opacities[:, None]], axis=1)
    cov6 = covariance3d_batch(cloud.scales, cloud.rotations)
    sh_flat = cloud.sh.reshape(n, -1)
    if sh_flat.shape[1] % 2:
        sh_flat = np.concatenate([sh_flat, np.zeros((n, 1), np.float32)], axis=1)
    return PackedSplatBuffer(
        count=n, degree=cloud.degree,
        pos_opacity=_pack_halfs(pos_op),
        cov6=_pack_halfs(cov6),
        color=_pack_halfs(sh_flat),
        raw_rgb=raw_rgb,
    )


def unpack_buffer(buf: PackedSplatBuffer):
    """Decode a packed buffer to float arrays.

    Returns (positions (N,3), opacities (N,), cov6 (N,6), color) where
    color is (N, (degree+1)^2, 3) SH coefficients (or (N,3) raw RGB).
    """
    n = buf.count
    expect = (n * 2, n * 3, n * buf.color_words)
    got = (buf.pos_opacity.size, buf.cov6.size, buf.color.size)
    if got != expect:
        raise BoundsError(f"packed array lengths {got} != expected {expect}")
    pos_op = _unpack_halfs(buf.pos_opacity, 4)
    cov6 = _unpack_halfs(buf.cov6, 6)
    nsh = (buf.degree + 1) ** 2 * 3
    color = _unpack_halfs(buf.color, nsh)
    if buf.raw_rgb:
        color = color.reshape(n, -1)[:, :3]
    else:
        color = color.reshape(n, (buf.degree + 1) ** 2, 3)
    return pos_op[:, :3], pos_op[:, 3], cov6, color


def serialize_buffer(buf: PackedSplatBuffer) -> bytes:
    version = 2 if buf.raw_rgb else 1
    header = MAGIC + struct.pack("<III", version, buf.count, buf.degree)
    return header + buf.pos_opacity.astype("<u4").tobytes() \
        + buf.cov6.astype("<u4").tobytes() + buf.color.astype("<u4").tobytes()


def deserialize_buffer(data: bytes) -> PackedSplatBuffer:
    if len(data) < 16 or data[:4] != MAGIC:
        raise AssetParseError("not a VSPK container")
    version, count, degree = struct.unpack_from("<III", data, 4)
    if version not in (1, 2):
        raise UnsupportedFormatError(f"unknown VSPK version {version}")
    if degree > 3:
        raise SchemaError(f"invalid SH degree {degree}")
    n_pos, n_cov = count * 2, count * 3
    n_col = count * _color_words(degree)
    need = 16 + 4 * (n_pos + n_cov + n_col)
    if len(data) < need:
        raise BoundsError(f"VSPK payload truncated: {len(data)} < {need} bytes")
    words = np.frombuffer(data, dtype="<u4", offset=16,
                          count=n_pos + n_cov + n_col)
    return PackedSplatBuffer(
        count=count, degree=degree,
        pos_opacity=words[:n_pos].copy(),
        cov6=words[n_pos:n_pos + n_cov].copy(),
        color=words[n_pos + n_cov:].copy(),
        raw_rgb=(version == 2),
    )


def parse_splat_ply(data: bytes) -> GaussianCloud:
    """Parse a binary-little-endian splat PLY into post-activation Gaussians.

    Applies the storage activations of the de-facto splat schema: opacity =
    sigmoid(raw), scale = exp(raw), rotation renormalized. f_rest is laid
    out channel-major (all R coefficients, then G, then B); its count fixes
    the SH degree via (degree+1)^2*3 - 3.
    """
    stream = io.BytesIO(data)
    first = stream.readline()
    if first.strip() != b"ply":
        raise AssetParseError("missing 'ply' magic")
    fmt = None
    properties: list[tuple[str, str]] = []
    vertex_count = None
    in_vertex = False
    while True:
        line = stream.readline()
        if not line:
            raise AssetParseError("unterminated PLY header")
        try:
            text = line.decode("ascii").strip()
        except UnicodeDecodeError as e:
            raise AssetParseError(f"non-ascii PLY header: {e}") from e
        if text == "end_header":
            break
        parts = text.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            if len(parts) < 2:
                raise AssetParseError("malformed format line")
            fmt = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3:
                raise AssetParseError(f"malformed element line: {text!r}")
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                try:
                    vertex_count = int(parts[2])
                except ValueError as e:
                    raise AssetParseError(f"bad vertex count: {parts[2]!r}") from e
                if vertex_count < 0:
                    raise AssetParseError("negative vertex count")
        elif parts[0] == "property" and in_vertex:
            if len(parts) != 3 or parts[1] == "list":
                raise UnsupportedFormatError(f"unsupported property: {text!r}")
            if parts[1] not in _PLY_DTYPES:
                raise UnsupportedFormatError(f"unknown property type {parts[1]!r}")
            properties.append((parts[2], _PLY_DTYPES[parts[1]]))

    if fmt is None:
        raise AssetParseError("PLY header has no format line")
    if fmt == "ascii":
        raise UnsupportedFormatError("ascii PLY is not supported")
    if fmt != "binary_little_endian":
        raise UnsupportedFormatError(f"unsupported PLY format {fmt!r}")
    if vertex_count is None:
        raise SchemaError("vertex")

    names = [n for n, _ in properties]
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate property in {names}")
    required = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    for name in required:
        if name not in names:
            raise SchemaError(name)
    n_rest = sum(1 for n in names if n.startswith("f_rest_"))
    for i in range(n_rest):
        if f"f_rest_{i}" not in names:
            raise SchemaError(f"f_rest_{i}")
    if n_rest not in _REST_TO_DEGREE:
        raise SchemaError(f"f_rest count {n_rest} is not one of {sorted(_REST_TO_DEGREE)}")
    degree = _REST_TO_DEGREE[n_rest]

    dtype = np.dtype(properties)
    payload = data[stream.tell():]
    need = dtype.itemsize * vertex_count
    if len(payload) < need:
        raise BoundsError(f"PLY payload truncated: {len(payload)} < {need} bytes")
    rec = np.frombuffer(payload, dtype=dtype, count=vertex_count)

    def col(name):
        return rec[name].astype(np.float64)

    positions = np.stack([col("x"), col("y"), col("z")], axis=1)
    # Garbage payloads can overflow exp to inf; the finiteness check below
    # rejects them, so the overflow itself is silenced.
    with np.errstate(over="ignore"):
        scales = np.exp(np.stack([col(f"scale_{i}") for i in range(3)], axis=1))
        rot = np.stack([col(f"rot_{i}") for i in range(4)], axis=1)
        norm = np.linalg.norm(rot, axis=1, keepdims=True)
        if vertex_count and (np.any(norm < 1e-8) or not np.all(np.isfinite(norm))):
            raise AssetParseError("zero-norm or non-finite rotation quaternion")
        rot = rot / np.where(norm == 0, 1.0, norm)
        opacity = 1.0 / (1.0 + np.exp(-col("opacity")))

    n_coef = (degree + 1) ** 2
    sh = np.zeros((vertex_count, n_coef, 3))
    for c in range(3):
        sh[:, 0, c] = col(f"f_dc_{c}")
        for j in range(n_coef - 1):
            sh[:, j + 1, c] = col(f"f_rest_{c * (n_coef - 1) + j}")
    if vertex_count and not (np.all(np.isfinite(positions)) and np.all(np.isfinite(sh))
                             and np.all(np.isfinite(scales))):
        raise AssetParseError("non-finite values in PLY payload")
    return GaussianCloud(positions, scales, rot, opacity, sh, degree)


def parse_mesh_obj(data: bytes) -> MeshAsset:
    """Parse a Wavefront OBJ subset: v (optionally with RGB) and f records.

    Faces are fan-triangulated; 1-based indices become 0-based. vt/vn and
    other record types are ignored. Triangles with repeated indices are
    dropped.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise AssetParseError(f"OBJ is not valid utf-8: {e}") from e
    vertices: list[list[float]] = []
    colors: list[list[float]] = []
    triangles: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise AssetParseError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                vals = [float(p) for p in parts[1:]]
            except ValueError:
                raise AssetParseError(f"line {lineno}: non-numeric vertex") from None
            vertices.append(vals[:3])
            if len(vals) >= 6:
                colors.append(vals[3:6])
        elif parts[0] == "f":
            if len(parts) < 4:
                raise AssetParseError(f"line {lineno}: face needs >= 3 vertices")
            idx = []
            for p in parts[1:]:
                tok = p.split("/")[0]
                try:
                    i = int(tok)
                except ValueError:
                    raise AssetParseError(f"line {lineno}: bad face index {tok!r}") from None
                if i < 1:
                    raise BoundsError(f"line {lineno}: face index {i} out of range")
                idx.append(i - 1)
            for k in range(1, len(idx) - 1):
                tri = (idx[0], idx[k], idx[k + 1])
                if len(set(tri)) == 3:
                    triangles.append(tri)
    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    tris = np.asarray(triangles, dtype=np.int32).reshape(-1, 3)
    if tris.size and int(tris.max()) >= len(verts):
        raise BoundsError(f"face index {int(tris.max()) + 1} exceeds {len(verts)} vertices")
    vcols = None
    if colors and len(colors) == len(vertices):
        vcols = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    return MeshAsset(vertices=verts, triangles=tris, vertex_colors=vcols)
