"""Linear blend skinning over canonical Gaussians with a joint hierarchy.

Forward kinematics produces posed global joint transforms; skinning blends
the rest-relative joint transforms with per-Gaussian weights, moves means
by the blended transform, and conjugates covariances by the polar-
orthonormalized rotation block so they stay positive definite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, InvalidRigError
from ..splatmath import GaussianCloud, covariance3d_batch, quat_to_rotmat, sym3_to_matrix
from .base import GaussianBatch, Generator, GeneratorInputs, PoseParams


@dataclass
class AvatarRig:
    """Canonical Gaussians, joint hierarchy, and row-stochastic skin weights."""
    canonical: GaussianCloud
    parent: np.ndarray          # (K,) parent index, -1 for the root
    rest_local: np.ndarray      # (K,4,4) local rest transforms
    skin_weights: np.ndarray    # (N,K)

    def __post_init__(self):
        self.parent = np.asarray(self.parent, dtype=np.int64).reshape(-1)
        k = len(self.parent)
        self.rest_local = np.asarray(self.rest_local, dtype=np.float64).reshape(k, 4, 4)
        self.skin_weights = np.asarray(self.skin_weights, dtype=np.float64).reshape(
            len(self.canonical), k)
        if np.count_nonzero(self.parent == -1) != 1:
            raise InvalidRigError("rig must have exactly one root joint")
        # Walking to the root must terminate: reject cycles and bad indices.
        for j in range(k):
            seen, cur = set(), j
            while cur != -1:
                if cur in seen or not (0 <= cur < k):
                    raise InvalidRigError(f"joint {j}: parent chain invalid at {cur}")
                seen.add(cur)
                cur = int(self.parent[cur])
        if np.any(self.skin_weights < -1e-9):
            raise InvalidInputError("negative skinning weight")
        rowsum = self.skin_weights.sum(axis=1)
        if len(rowsum) and np.any(np.abs(rowsum - 1.0) > 1e-5):
            raise InvalidInputError("skinning weight rows must sum to 1")
        # Topological order (parents first) for the FK chain.
        order, placed = [], {-1}
        pending = list(range(k))
        while pending:
            rest = []
            for j in pending:
                if int(self.parent[j]) in placed:
                    order.append(j)
                    placed.add(j)
                else:
                    rest.append(j)
            pending = rest
        self._topo = np.array(order, dtype=np.int64)
        self._rest_global = self._chain(np.tile(np.eye(4), (k, 1, 1)))

    def _chain(self, pose_local: np.ndarray) -> np.ndarray:
        """Compose rest_local * pose_local up the hierarchy."""
        k = len(self.parent)
        out = np.empty((k, 4, 4))
        for j in self._topo:
            local = self.rest_local[j] @ pose_local[j]
            p = int(self.parent[j])
            out[j] = local if p == -1 else out[p] @ local
        return out

    @property
    def rest_global(self) -> np.ndarray:
        return self._rest_global

    @property
    def joint_count(self) -> int:
        return len(self.parent)


def fk_joint_transforms(rig: AvatarRig, pose: PoseParams) -> np.ndarray:
    """Posed global joint transforms M_k.

    M_k = M_parent(k) * rest_local_k * rot(pose_k); the root is additionally
    translated by pose.root_translation (world frame).
    """
    rot = np.asarray(pose.joint_rotations, dtype=np.float64).reshape(-1, 4)
    if len(rot) != rig.joint_count:
        raise InvalidInputError(
            f"pose has {len(rot)} joints, rig has {rig.joint_count}")
    pose_local = np.tile(np.eye(4), (rig.joint_count, 1, 1))
    for j in range(rig.joint_count):
        pose_local[j, :3, :3] = quat_to_rotmat(rot[j])
    globals_ = rig._chain(pose_local)
    t = np.asarray(pose.root_translation, dtype=np.float64).reshape(3)
    globals_[:, :3, 3] += t
    return globals_


def _polar_rotations(mats: np.ndarray) -> np.ndarray:
    """Nearest rotation (polar factor) of each (N,3,3) linear block."""
    u, _, vt = np.linalg.svd(mats)
    r = u @ vt
    det = np.linalg.det(r)
    flip = det < 0
    if np.any(flip):
        u = u.copy()
        u[flip, :, 2] *= -1.0
        r = u @ vt
    return r


class LbsAvatarGenerator(Generator):
    """Per-frame LBS deformation of a canonical Gaussian avatar."""

    requires_pose = True

    def __init__(self, rig: AvatarRig):
        self.rig = rig
        self._cov_can = sym3_to_matrix(
            covariance3d_batch(rig.canonical.scales, rig.canonical.rotations))

    def _generate(self, inputs: GeneratorInputs) -> GaussianBatch:
        rig = self.rig
        posed = fk_joint_transforms(rig, inputs.pose)
        # Rest-relative joint transforms: identity pose is a no-op.
        relative = posed @ np.linalg.inv(rig.rest_global)
        blended = np.einsum("nk,kij->nij", rig.skin_weights, relative)

        can_pos = rig.canonical.positions.astype(np.float64)
        positions = np.einsum("nij,nj->ni", blended[:, :3, :3], can_pos) \
            + blended[:, :3, 3]
        r = _polar_rotations(blended[:, :3, :3])
        cov = np.einsum("nij,njk,nlk->nil", r, self._cov_can, r)
        cov_upper = np.stack([cov[:, 0, 0], cov[:, 0, 1], cov[:, 0, 2],
                              cov[:, 1, 1], cov[:, 1, 2], cov[:, 2, 2]], axis=1)

        return GaussianBatch(positions, rig.canonical.opacities,
                             rig.canonical.sh, cov_upper=cov_upper,
                             color_space="sh", degree=rig.canonical.degree)
