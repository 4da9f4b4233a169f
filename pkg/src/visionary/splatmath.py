"""Pure numerical kernels for Gaussian splatting.

Covariance construction from scale/rotation, camera projection to NDC,
EWA-style projection of 3D covariances to screen-space ellipses, 2x2
eigendecomposition, spherical-harmonics color evaluation, and binary16
round-tripping. Everything here is a pure function of its inputs.

Conventions: right-handed world, camera looks down -z, column vectors,
NDC x,y in [-1,1] and depth in [0,1]. Symmetric matrices travel as their
upper-triangular entries: Sym3 = (xx,xy,xz,yy,yz,zz), Sym2 = (xx,xy,yy).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCovarianceError, DegenerateDepthError, InvalidInputError

# Low-pass dilation added to the 2D covariance diagonal (pixel^2). Matches
# the reference rasterizer and keeps every projected ellipse positive definite.
COV2D_DILATION = 0.3

# Real SH basis constants, bands 0..3, reference splat-PLY convention.
SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
         -1.0925484305920792, 0.5462742152960396)
SH_C3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
         0.3731763325901154, -0.4570457994644658, 1.445305721320277,
         -0.5900435899266435)


@dataclass
class GaussianSource:
    """One unpacked Gaussian primitive.

    scale is post-activation (linear, not log); rotation is a (w,x,y,z)
    quaternion; sh holds (degree+1)^2 RGB coefficient triples.
    """
    position: np.ndarray        # (3,)
    scale: np.ndarray           # (3,)
    rotation: np.ndarray        # (4,) w,x,y,z
    opacity: float
    sh: np.ndarray              # ((degree+1)^2, 3)
    degree: int


class GaussianCloud:
    """Struct-of-arrays container over N GaussianSource primitives.

    Behaves as a sequence of GaussianSource; all numeric work happens on
    the underlying arrays.
    """

    def __init__(self, positions, scales, rotations, opacities, sh, degree):
        self.positions = np.asarray(positions, dtype=np.float32).reshape(-1, 3)
        n = len(self.positions)
        self.scales = np.asarray(scales, dtype=np.float32).reshape(n, 3)
        self.rotations = np.asarray(rotations, dtype=np.float32).reshape(n, 4)
        self.opacities = np.asarray(opacities, dtype=np.float32).reshape(n)
        self.sh = np.asarray(sh, dtype=np.float32).reshape(n, (degree + 1) ** 2, 3)
        self.degree = int(degree)

    def __len__(self):
        return len(self.positions)

    def __getitem__(self, i) -> GaussianSource:
        return GaussianSource(self.positions[i], self.scales[i],
                              self.rotations[i], float(self.opacities[i]),
                              self.sh[i], self.degree)

    @classmethod
    def from_sources(cls, sources) -> "GaussianCloud":
        if not sources:
            return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 4)),
                       np.zeros(0), np.zeros((0, 1, 3)), 0)
        degree = sources[0].degree
        return cls(np.stack([s.position for s in sources]),
                   np.stack([s.scale for s in sources]),
                   np.stack([s.rotation for s in sources]),
                   np.array([s.opacity for s in sources]),
                   np.stack([s.sh for s in sources]), degree)


@dataclass(frozen=True)
class Camera:
    """Pinhole camera: world->camera rigid view, camera->clip projection.

    NDC depth is 0 at the near plane and 1 at the far plane; focal lengths
    are in pixels.
    """
    view: np.ndarray    # (4,4) world -> camera
    proj: np.ndarray    # (4,4) camera -> clip
    width: int
    height: int
    near: float
    far: float
    fx: float
    fy: float

    @property
    def position(self) -> np.ndarray:
        """Camera center in world space."""
        r = self.view[:3, :3]
        return -r.T @ self.view[:3, 3]

    @property
    def forward(self) -> np.ndarray:
        """Unit view direction (world space, points away from the camera)."""
        return -self.view[2, :3] / np.linalg.norm(self.view[2, :3])

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 1.0, 0.0), *, width, height,
                fov_y=math.radians(60.0), near=0.1, far=100.0) -> "Camera":
        eye = np.asarray(eye, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        fwd = target - eye
        n = np.linalg.norm(fwd)
        if n == 0:
            raise InvalidInputError("camera eye and target coincide")
        fwd = fwd / n
        right = np.cross(fwd, np.asarray(up, dtype=np.float64))
        rn = np.linalg.norm(right)
        if rn < 1e-12:
            raise InvalidInputError("camera up vector parallel to view direction")
        right = right / rn
        true_up = np.cross(right, fwd)
        view = np.eye(4)
        view[0, :3] = right
        view[1, :3] = true_up
        view[2, :3] = -fwd          # camera looks down -z
        view[:3, 3] = -view[:3, :3] @ eye
        fy = (height / 2.0) / math.tan(fov_y / 2.0)
        fx = fy
        return cls.from_intrinsics(view, width=width, height=height,
                                   fx=fx, fy=fy, near=near, far=far)

    @classmethod
    def from_intrinsics(cls, view, *, width, height, fx, fy, near, far) -> "Camera":
        if not (0 < near < far):
            raise InvalidInputError("need 0 < near < far")
        proj = np.zeros((4, 4))
        proj[0, 0] = 2.0 * fx / width
        proj[1, 1] = 2.0 * fy / height
        # NDC z = 0 at cam z = -near, 1 at cam z = -far.
        a = far / (near - far)
        proj[2, 2] = a
        proj[2, 3] = near * a
        proj[3, 2] = -1.0
        return cls(view=np.asarray(view, dtype=np.float64), proj=proj,
                   width=int(width), height=int(height), near=float(near),
                   far=float(far), fx=float(fx), fy=float(fy))


def quat_to_rotmat(q) -> np.ndarray:
    """Rotation matrix from a (w,x,y,z) quaternion, renormalized on entry."""
    q = np.asarray(q, dtype=np.float64).reshape(4)
    n = np.linalg.norm(q)
    if n < 1e-8 or not np.isfinite(n):
        raise InvalidInputError("zero-norm or non-finite quaternion")
    w, x, y, z = q / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_to_rotmat_batch(q: np.ndarray) -> np.ndarray:
    """Vectorized quat_to_rotmat over an (N,4) array."""
    q = np.asarray(q, dtype=np.float64).reshape(-1, 4)
    n = np.linalg.norm(q, axis=1, keepdims=True)
    if np.any(n < 1e-8) or not np.all(np.isfinite(n)):
        raise InvalidInputError("zero-norm or non-finite quaternion in batch")
    w, x, y, z = (q / n).T
    m = np.empty((len(q), 3, 3))
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - w * z)
    m[:, 0, 2] = 2 * (x * z + w * y)
    m[:, 1, 0] = 2 * (x * y + w * z)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - w * x)
    m[:, 2, 0] = 2 * (x * z - w * y)
    m[:, 2, 1] = 2 * (y * z + w * x)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def covariance3d(scale, rotation_matrix) -> np.ndarray:
    """Sigma = R diag(s)^2 R^T, returned as upper-triangular 6-tuple."""
    s = np.asarray(scale, dtype=np.float64).reshape(3)
    r = np.asarray(rotation_matrix, dtype=np.float64).reshape(3, 3)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(r))):
        raise InvalidInputError("non-finite covariance inputs")
    if np.any(s <= 0):
        raise InvalidInputError("scale components must be positive")
    m = r @ np.diag(s * s) @ r.T
    return np.array([m[0, 0], m[0, 1], m[0, 2], m[1, 1], m[1, 2], m[2, 2]])


def covariance3d_batch(scales: np.ndarray, rotations: np.ndarray) -> np.ndarray:
    """Vectorized covariance3d: (N,3) scales, (N,4) quaternions -> (N,6)."""
    r = quat_to_rotmat_batch(rotations)
    s = np.asarray(scales, dtype=np.float64).reshape(-1, 3)
    rs = r * (s * s)[:, None, :]          # R diag(s^2)
    m = np.einsum("nij,nkj->nik", rs, r)  # ... R^T
    return np.stack([m[:, 0, 0], m[:, 0, 1], m[:, 0, 2],
                     m[:, 1, 1], m[:, 1, 2], m[:, 2, 2]], axis=1)


def sym3_to_matrix(c6: np.ndarray) -> np.ndarray:
    """(..,6) upper-triangular entries -> (..,3,3) symmetric matrices."""
    c6 = np.asarray(c6, dtype=np.float64)
    m = np.empty(c6.shape[:-1] + (3, 3))
    m[..., 0, 0] = c6[..., 0]
    m[..., 0, 1] = m[..., 1, 0] = c6[..., 1]
    m[..., 0, 2] = m[..., 2, 0] = c6[..., 2]
    m[..., 1, 1] = c6[..., 3]
    m[..., 1, 2] = m[..., 2, 1] = c6[..., 4]
    m[..., 2, 2] = c6[..., 5]
    return m


def project_to_ndc(p_world, cam: Camera, margin: float = 1.3):
    """Project a world point: (ndc_xy, ndc_z, cam_z, visible).

    visible is False when the point sits at/behind the near plane or lands
    outside the frustum with the given clip-bound margin.
    """
    p = np.asarray(p_world, dtype=np.float64).reshape(3)
    pc = cam.view[:3, :3] @ p + cam.view[:3, 3]
    cam_z = pc[2]
    if cam_z >= -cam.near:
        return np.zeros(2), 0.0, cam_z, False
    clip = cam.proj @ np.array([pc[0], pc[1], pc[2], 1.0])
    ndc = clip[:3] / clip[3]
    visible = (abs(ndc[0]) <= margin and abs(ndc[1]) <= margin
               and 0.0 <= ndc[2] <= 1.0)
    return ndc[:2], float(ndc[2]), float(cam_z), visible


def cov2d_project(cov6, p_cam, cam: Camera) -> np.ndarray:
    """Project a world covariance to a screen-space Sym2 (pixel^2 units).

    Returns J W Sigma W^T J^T + dilation*I, with W the view rotation block
    and J the affine EWA Jacobian at the camera-space point.
    """
    x, y, z = np.asarray(p_cam, dtype=np.float64).reshape(3)
    if z == 0.0:
        raise DegenerateDepthError("camera-space depth is zero")
    sigma = sym3_to_matrix(cov6)
    w = cam.view[:3, :3]
    j = np.array([
        [cam.fx / z, 0.0, -cam.fx * x / (z * z)],
        [0.0, cam.fy / z, -cam.fy * y / (z * z)],
    ])
    m = j @ w
    s = m @ sigma @ m.T
    return np.array([s[0, 0] + COV2D_DILATION, s[0, 1], s[1, 1] + COV2D_DILATION])


def cov2d_project_batch(cov6: np.ndarray, p_cam: np.ndarray, cam: Camera) -> np.ndarray:
    """Vectorized cov2d_project: (N,6) covariances, (N,3) cam points -> (N,3)."""
    p = np.asarray(p_cam, dtype=np.float64).reshape(-1, 3)
    z = p[:, 2]
    sigma = sym3_to_matrix(cov6)
    w = cam.view[:3, :3]
    j = np.zeros((len(p), 2, 3))
    j[:, 0, 0] = cam.fx / z
    j[:, 0, 2] = -cam.fx * p[:, 0] / (z * z)
    j[:, 1, 1] = cam.fy / z
    j[:, 1, 2] = -cam.fy * p[:, 1] / (z * z)
    m = j @ w
    s = np.einsum("nij,njk,nlk->nil", m, sigma, m)
    return np.stack([s[:, 0, 0] + COV2D_DILATION, s[:, 0, 1],
                     s[:, 1, 1] + COV2D_DILATION], axis=1)


def eigen2x2(s2):
    """Eigendecompose a positive-definite Sym2.

    Returns (lam1, lam2, v1, v2) with lam1 >= lam2 > 0 and unit v1 ⟂ v2.
    Isotropic matrices tie-break to v1 = (1,0).
    """
    a, b, c = np.asarray(s2, dtype=np.float64).reshape(3)
    mid = 0.5 * (a + c)
    disc = math.hypot(0.5 * (a - c), b)
    lam1, lam2 = mid + disc, mid - disc
    if lam2 <= 0 or not np.isfinite(lam1):
        raise DegenerateCovarianceError("2x2 covariance not positive definite")
    if disc < 1e-12 * max(1.0, abs(mid)) or (b == 0.0 and a >= c):
        v1 = np.array([1.0, 0.0])
    elif b == 0.0:
        v1 = np.array([0.0, 1.0])
    else:
        v1 = np.array([b, lam1 - a])
        v1 = v1 / np.linalg.norm(v1)
    v2 = np.array([-v1[1], v1[0]])
    return lam1, lam2, v1, v2


def eigen2x2_batch(s2: np.ndarray):
    """Vectorized eigen2x2 over (N,3) Sym2 entries; same tie-break rule."""
    s2 = np.asarray(s2, dtype=np.float64).reshape(-1, 3)
    a, b, c = s2[:, 0], s2[:, 1], s2[:, 2]
    mid = 0.5 * (a + c)
    disc = np.hypot(0.5 * (a - c), b)
    lam1, lam2 = mid + disc, mid - disc
    v1 = np.stack([b, lam1 - a], axis=1)
    norm = np.linalg.norm(v1, axis=1)
    tie = (disc < 1e-12 * np.maximum(1.0, np.abs(mid))) | (norm < 1e-300) \
        | ((b == 0.0) & (a >= c))
    axis_y = (b == 0.0) & (a < c) & ~tie
    safe = np.where(norm == 0, 1.0, norm)
    v1 = v1 / safe[:, None]
    v1[tie] = (1.0, 0.0)
    v1[axis_y] = (0.0, 1.0)
    v2 = np.stack([-v1[:, 1], v1[:, 0]], axis=1)
    return lam1, lam2, v1, v2


def eval_sh(sh, degree: int, view_dir) -> np.ndarray:
    """Evaluate SH color: clamp(0.5 + sum_lm Y_lm(dir) c_lm, 0, 1)."""
    sh = np.asarray(sh, dtype=np.float64).reshape(-1, 3)
    return eval_sh_batch(sh[None], degree, np.asarray(view_dir, dtype=np.float64)[None])[0]


def eval_sh_batch(sh: np.ndarray, degree: int, dirs: np.ndarray) -> np.ndarray:
    """Vectorized eval_sh: (N,B,3) coefficients, (N,3) unit dirs -> (N,3)."""
    if degree < 0 or degree > 3:
        raise InvalidInputError(f"SH degree {degree} out of range 0..3")
    sh = np.asarray(sh, dtype=np.float64)
    if sh.shape[1] != (degree + 1) ** 2:
        raise InvalidInputError("SH coefficient count does not match degree")
    out = SH_C0 * sh[:, 0]
    if degree >= 1:
        x, y, z = dirs[:, 0:1], dirs[:, 1:2], dirs[:, 2:3]
        out = out - SH_C1 * y * sh[:, 1] + SH_C1 * z * sh[:, 2] - SH_C1 * x * sh[:, 3]
    if degree >= 2:
        xx, yy, zz = x * x, y * y, z * z
        xy, yz, xz = x * y, y * z, x * z
        out = (out + SH_C2[0] * xy * sh[:, 4] + SH_C2[1] * yz * sh[:, 5]
               + SH_C2[2] * (2 * zz - xx - yy) * sh[:, 6]
               + SH_C2[3] * xz * sh[:, 7] + SH_C2[4] * (xx - yy) * sh[:, 8])
    if degree >= 3:
        out = (out + SH_C3[0] * y * (3 * xx - yy) * sh[:, 9]
               + SH_C3[1] * xy * z * sh[:, 10]
               + SH_C3[2] * y * (4 * zz - xx - yy) * sh[:, 11]
               + SH_C3[3] * z * (2 * zz - 3 * xx - 3 * yy) * sh[:, 12]
               + SH_C3[4] * x * (4 * zz - xx - yy) * sh[:, 13]
               + SH_C3[5] * z * (xx - yy) * sh[:, 14]
               + SH_C3[6] * x * (xx - 3 * yy) * sh[:, 15])
    return np.clip(out + 0.5, 0.0, 1.0)


def f16_roundtrip(x):
    """Round-to-nearest-even binary16 conversion, widened back to float.

    Overflow saturates to signed infinity (binary16 max is 65504).
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("f16_roundtrip requires finite input")
    with np.errstate(over="ignore"):
        out = arr.astype(np.float16).astype(np.float64)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out
