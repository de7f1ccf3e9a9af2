"""Exception types shared across the toolkit."""


class MrkError(Exception):
    """Base class for all toolkit errors."""


class FormatError(MrkError):
    """File is not a well-formed NIfTI-1 stream."""


class UnsupportedDataError(MrkError):
    """Input uses a datatype or layout the toolkit does not support."""


class ValidationError(MrkError):
    """An invariant of a domain type is violated (non-finite voxels, bad grid...)."""


class DegenerateInputError(MrkError):
    """Input is valid but degenerate for the requested operation (zero variance...)."""


class GridMismatchError(MrkError):
    """Two objects that must share a grid (dims/spacing/classes) do not."""


class ConfigError(MrkError):
    """Severity or augmentation configuration is missing or invalid."""
