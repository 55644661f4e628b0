"""Exception hierarchy shared by the whole engine."""


class CldError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(CldError):
    """Mismatched or unknown model configuration."""


class ShapeError(CldError):
    """Tensor dimensions violate an operation's preconditions."""


class InputError(CldError):
    """Unreadable or unsupported user input (images, feature files, CSVs)."""


class NumericError(CldError):
    """A numeric routine (SVD, solve) failed to produce a usable result."""


class EstimationError(CldError):
    """Robust model estimation could not find a valid model."""


class FormatError(CldError):
    """Binary file container violates the on-disk format."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(FormatError):
    """File version is not supported by this build."""


class TruncatedFileError(FormatError):
    """File ended before the declared payload was complete."""


class LayoutMismatchError(FormatError):
    """Stored tensors do not match the layout implied by the config."""
