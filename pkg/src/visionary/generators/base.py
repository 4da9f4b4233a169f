"""Gaussian Generator contract: per-frame inputs in, Gaussian batches out.

A generator is constructed once (session semantics: all weights and
buffers live for the lifetime of the object) and queried every frame with
lightweight inputs. Outputs are immutable value objects; calling generate
twice with identical inputs yields byte-identical batches.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError, MissingInputError
from ..splatmath import GaussianCloud

# Candidates at or below this opacity are dropped; shared with the
# rasterizer's alpha_min so one threshold has one meaning.
ALPHA_PRUNE = 1.0 / 255.0


@dataclass(frozen=True)
class PoseParams:
    """Skeleton pose: per-joint (w,x,y,z) quaternions plus root translation."""
    joint_rotations: np.ndarray          # (K,4)
    root_translation: np.ndarray         # (3,)
    shape: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class GeneratorInputs:
    """Per-frame control signals fed to a generator."""
    frame_index: int = 0
    time: float = 0.0
    camera_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    view_dir: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    pose: PoseParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "time", float(min(1.0, max(0.0, self.time))))
        vd = np.asarray(self.view_dir, dtype=np.float64).reshape(3)
        n = np.linalg.norm(vd)
        if n < 1e-12 or not np.isfinite(n):
            raise InvalidInputError("view_dir must be a nonzero finite vector")
        object.__setattr__(self, "view_dir", vd / n)
        object.__setattr__(self, "camera_position",
                           np.asarray(self.camera_position, dtype=np.float64).reshape(3))


class GaussianBatch:
    """Generator output: N Gaussians plus count/precision metadata.

    Shape is carried either as cov_upper (N,6) or as scale (N,3) +
    rotation (N,4); exactly one representation is set. color is (N,3) raw
    RGB or (N,(degree+1)^2,3) SH coefficients per color_space.
    """

    def __init__(self, positions, opacity, color, *, cov_upper=None,
                 scale=None, rotation=None, color_space="sh", degree=0,
                 precision="fp32"):
        self.positions = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
        n = len(self.positions)
        self.opacity = np.ascontiguousarray(opacity, dtype=np.float64).reshape(n)
        has_cov = cov_upper is not None
        has_sr = scale is not None or rotation is not None
        if has_cov == has_sr:
            raise InvalidInputError("exactly one of cov_upper or scale+rotation required")
        if has_cov:
            self.cov_upper = np.ascontiguousarray(cov_upper, dtype=np.float64).reshape(n, 6)
            self.scale = self.rotation = None
        else:
            if scale is None or rotation is None:
                raise InvalidInputError("scale and rotation must be given together")
            self.cov_upper = None
            self.scale = np.ascontiguousarray(scale, dtype=np.float64).reshape(n, 3)
            self.rotation = np.ascontiguousarray(rotation, dtype=np.float64).reshape(n, 4)
        if color_space not in ("sh", "rgb"):
            raise InvalidInputError(f"unknown color space {color_space!r}")
        self.color_space = color_space
        if color_space == "rgb":
            self.color = np.ascontiguousarray(color, dtype=np.float64).reshape(n, 3)
        else:
            self.color = np.ascontiguousarray(color, dtype=np.float64).reshape(
                n, (degree + 1) ** 2, 3)
        self.count = n
        self.degree = int(degree)
        if precision not in ("fp32", "fp16"):
            raise InvalidInputError(f"unknown precision tag {precision!r}")
        self.precision = precision
        if n and (np.any(self.opacity < 0) or np.any(self.opacity > 1)):
            raise InvalidInputError("opacity outside [0,1]")


class Generator:
    """Base generator: subclasses implement _generate(inputs)."""

    requires_pose = False

    def generate(self, inputs: GeneratorInputs) -> GaussianBatch:
        if self.requires_pose and inputs.pose is None:
            raise MissingInputError(f"{type(self).__name__} requires pose parameters")
        return self._generate(inputs)

    def _generate(self, inputs: GeneratorInputs) -> GaussianBatch:
        raise NotImplementedError


class StaticGenerator(Generator):
    """Emits a fixed Gaussian set every frame, ignoring the inputs."""

    def __init__(self, cloud: GaussianCloud):
        self.cloud = cloud
        self._batch = GaussianBatch(
            cloud.positions, cloud.opacities, cloud.sh,
            scale=cloud.scales, rotation=cloud.rotations,
            color_space="sh", degree=cloud.degree)

    def _generate(self, inputs: GeneratorInputs) -> GaussianBatch:
        return self._batch
