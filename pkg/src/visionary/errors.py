"""Typed error hierarchy shared across the engine.

Every recoverable failure surfaces as a subclass of VisionaryError so
callers (CLI, viewer service, fuzz harnesses) can catch one base type.
"""


class VisionaryError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(VisionaryError):
    """An argument violates a documented precondition."""


class SchemaError(VisionaryError):
    """An asset is structurally valid but misses a required field."""


class BoundsError(VisionaryError):
    """An index or payload runs past the data it refers to."""


class UnsupportedFormatError(VisionaryError):
    """The asset encoding is recognized but not supported."""


class AssetParseError(VisionaryError):
    """The asset bytes could not be parsed at all."""


class DegenerateDepthError(VisionaryError):
    """A projected point sits at zero camera depth."""


class DegenerateCovarianceError(VisionaryError):
    """A covariance expected to be positive definite is not."""


class MissingInputError(VisionaryError):
    """A generator requires a per-frame input that was not provided."""


class InvalidRigError(VisionaryError):
    """A skeleton description is not a single-rooted forest."""


class InvalidDepthError(VisionaryError):
    """A depth value outside the encodable range (NaN or negative)."""


class ContractViolationError(VisionaryError):
    """An internal pipeline contract was broken (debug checks)."""


class ProtocolError(VisionaryError):
    """A malformed message arrived on the viewer connection."""


class EncodeError(VisionaryError):
    """A server message could not be encoded (e.g. oversize frame)."""
