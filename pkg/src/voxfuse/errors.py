"""Exception hierarchy shared across the toolkit.

Every error carries a stable machine-readable ``kind`` string that the CLI
prints as ``error: <kind>: <message>``.
"""


class VoxfuseError(Exception):
    kind = "error"


class InvalidArgument(VoxfuseError, ValueError):
    kind = "invalid-argument"


class ReflectionOrDegenerate(VoxfuseError, ValueError):
    """Linear block has non-positive determinant; not a similarity."""

    kind = "reflection-or-degenerate"


class NotASimilarity(VoxfuseError, ValueError):
    """Linear block deviates from scale-times-rotation beyond tolerance."""

    kind = "not-a-similarity"


class NotInvertible(VoxfuseError, ValueError):
    kind = "not-invertible"


class InvalidTransform(VoxfuseError, ValueError):
    """Matrix is not a homogeneous transform (bad bottom row or shape)."""

    kind = "invalid-transform"


class InsufficientCorrespondences(VoxfuseError, ValueError):
    kind = "insufficient-correspondences"


class DegenerateConfiguration(VoxfuseError, ValueError):
    """Source points collinear or coincident; rotation unobservable."""

    kind = "degenerate-configuration"


class NoOverlap(VoxfuseError, RuntimeError):
    """ICP found zero pairs within the match distance.

    ``iteration`` is the 1-based iteration at which matching came up empty.
    """

    kind = "no-overlap"

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


class FrameMismatch(VoxfuseError, ValueError):
    kind = "frame-mismatch"


class ParseError(VoxfuseError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    kind = "parse-error"

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class UnsupportedFormat(VoxfuseError, ValueError):
    kind = "unsupported-format"


class ValidationError(VoxfuseError, ValueError):
    """Well-formed input with out-of-range values."""

    kind = "validation-error"


class InvalidScene(VoxfuseError, ValueError):
    kind = "invalid-scene"
