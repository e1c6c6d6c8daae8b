"""
Error Types Module

This module defines the exception hierarchy used across the glaucoma pipeline.
Every exception carries a short machine-parseable ``category`` and the exit code
the command-line entry point returns for it.

Categories:
- usage:   bad command-line arguments or configuration (exit 2)
- data:    unreadable, malformed or inconsistent input data (exit 3)
- numeric: numerical degeneracies such as empty regions or zero variance (exit 4)
"""

from typing import Optional


class OctGlaucomaError(Exception):
    """Base class for all errors raised by the package."""

    category: str = "internal"
    exit_code: int = 1


class UsageError(OctGlaucomaError):
    """
    Exception raised when the caller asks for something that cannot be run.

    This exception is raised when:
    - Command-line flags are unknown or inconsistent
    - A configuration file holds unknown keys or invalid values
    - A protocol needs embeddings and none were supplied
    """

    category = "usage"
    exit_code = 2


class ConfigError(UsageError):
    """Exception raised when an experiment configuration file fails validation."""


class MissingEmbeddingsError(UsageError):
    """Exception raised when hybrid or deep mode runs without an embedding source."""


class DataError(OctGlaucomaError):
    """Base class for input data problems."""

    category = "data"
    exit_code = 3


class MissingFileError(DataError):
    """
    Exception raised when a file referenced by the caller or a manifest is missing.

    This exception is raised when:
    - The manifest itself does not exist
    - A manifest row points at an image, boundary or mask file that does not exist
    """


class MalformedRowError(DataError):
    """
    Exception raised when a manifest row cannot be parsed.

    This exception is raised when:
    - A required column is missing or empty
    - Numeric fields do not parse
    - Image, boundary and mask dimensions disagree
    """

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"manifest row {row}: {message}")
        self.detail = message

    def __reduce__(self):
        return (type(self), (self.row, self.detail))


class DuplicateScanIdError(DataError):
    """Exception raised when the same scan_id appears twice in a dataset."""


class ConflictingLabelError(DataError):
    """Exception raised when one patient carries both labels."""


class ImageFormatError(DataError):
    """Exception raised when an image file is not an 8-bit gray map."""


class FeatureMatrixFormatError(DataError):
    """
    Exception raised when a feature-matrix file is invalid.

    This exception is raised when:
    - The header repeats a column name
    - A value does not parse or is not finite
    - The first column is not scan_id
    """


class EmbeddingFormatError(DataError):
    """
    Exception raised when an embedding table is invalid or incomplete.

    This exception is raised when:
    - Rows have different numbers of values (ragged table)
    - The dimension differs from the configured one
    - A scan_id needed for a join is missing
    """


class ModelFormatError(DataError):
    """Exception raised when a saved model file has an unknown version or a bad layout."""


class DimensionMismatchError(DataError):
    """Exception raised when arrays that must align do not."""


class InsufficientClassError(DataError):
    """Exception raised when a class has fewer instances than an operation needs."""


class TooFewPatientsError(DataError):
    """Exception raised when a split or fold plan cannot be stratified by patient."""


class ScanExtractionError(DataError):
    """
    Exception raised when descriptor extraction fails for one scan.

    Wraps the original error, names the scan and keeps the original category so
    that a numeric degeneracy still exits with the numeric code.
    """

    def __init__(self, scan_id: str, cause: OctGlaucomaError):
        self.scan_id = scan_id
        self.cause = cause
        self.category = cause.category
        self.exit_code = cause.exit_code
        super().__init__(f"scan {scan_id}: {cause}")

    def __reduce__(self):
        return (type(self), (self.scan_id, self.cause))


class NumericDegeneracyError(OctGlaucomaError):
    """Base class for numerically degenerate inputs."""

    category = "numeric"
    exit_code = 4


class EmptyInputError(NumericDegeneracyError):
    """Exception raised when a sequence or matrix that must be non-empty is empty."""


class EmptyRegionError(NumericDegeneracyError):
    """Exception raised when a region mask (or its interior) holds no pixels."""


class EmptyPairsError(NumericDegeneracyError):
    """Exception raised when no valid pixel pair exists for a co-occurrence offset."""


class InsufficientDataError(NumericDegeneracyError):
    """Exception raised when there is not enough data for an estimate."""


class DegenerateSignalError(NumericDegeneracyError):
    """Exception raised when every rescaled-range window has zero spread."""


class DegenerateSampleError(NumericDegeneracyError):
    """Exception raised when a statistical test receives a constant sample."""


class ZeroVarianceFeatureError(NumericDegeneracyError):
    """Exception raised when a feature has zero variance on the training data."""

    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"feature {feature!r} has zero variance on the training data")

    def __reduce__(self):
        return (type(self), (self.feature,))


class AucUndefinedError(NumericDegeneracyError):
    """
    Exception raised when the AUC is requested for single-class labels.

    The remaining metrics are still computed and travel with the exception in
    ``report``.
    """

    def __init__(self, message: str, report: Optional[object] = None):
        self.report = report
        super().__init__(message)

    def __reduce__(self):
        return (type(self), (str(self), self.report))
