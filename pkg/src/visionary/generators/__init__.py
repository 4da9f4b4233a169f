"""Per-frame Gaussian generators behind one pluggable contract."""
from .base import (ALPHA_PRUNE, GaussianBatch, Generator, GeneratorInputs,
                   PoseParams, StaticGenerator)
from .mlp import AnchorMlpGenerator, AnchorSet, MlpParams, mlp_forward
from .hexplane import HexPlaneField, HexPlaneGenerator, hexplane_sample
from .avatar import AvatarRig, LbsAvatarGenerator, fk_joint_transforms
from . import fixtures

__all__ = [
    "ALPHA_PRUNE", "GaussianBatch", "Generator", "GeneratorInputs",
    "PoseParams", "StaticGenerator", "AnchorMlpGenerator", "AnchorSet",
    "MlpParams", "mlp_forward", "HexPlaneField", "HexPlaneGenerator",
    "hexplane_sample", "AvatarRig", "LbsAvatarGenerator",
    "fk_joint_transforms", "fixtures",
]
