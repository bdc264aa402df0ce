"""Exception taxonomy shared by the library, the CLI, and the HTTP service.

Every error carries a short machine-readable ``code`` (stable across
releases; the service serializes it) and an optional ``detail`` locating
the problem, e.g. a byte offset for parse failures or a JSON path for
schema violations.
"""

from __future__ import annotations


class SkeleformError(Exception):
    """Base class for all structured errors raised by this package."""

    code = "internal"

    def __init__(self, message: str, detail: str | None = None):
        super().__init__(message)
        self.detail = detail


class ParseError(SkeleformError):
    """Input bytes are not well-formed (JSON syntax, binary layout)."""

    code = "parse"


class SchemaError(SkeleformError):
    """Well-formed input whose structure or values violate the contract."""

    code = "schema"


class VersionError(SchemaError):
    """Document or model file declares an unsupported version."""


class IoError(SkeleformError):
    """Filesystem problem: unreadable file, missing directory."""

    code = "io"


class MissingJoint(SkeleformError):
    """An operation needs joints that the pose does not have visible."""

    code = "missing_joint"


class MissingNeck(MissingJoint):
    """The neck anchors every pose; nothing works without it."""


class InvalidFactors(SkeleformError):
    """Group factors must be finite and strictly positive."""

    code = "invalid_factors"


class ModelMissing(SkeleformError):
    """A request needs a model that the server did not load."""

    code = "model_missing"


class ShapeError(SkeleformError):
    """Array arguments disagree with the documented shapes."""

    code = "internal"


class EmptyDataset(SkeleformError):
    """Training was asked to run on zero poses."""

    code = "schema"
