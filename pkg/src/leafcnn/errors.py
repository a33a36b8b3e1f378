"""Exception hierarchy shared across the toolkit.

The three intermediate bases map onto the CLI's documented exit codes:
``ValidationError`` -> 3 (bad configuration or inputs), ``StorageError`` -> 2
(I/O failures while writing outputs), ``NumericError`` -> 4 (runtime or
numeric failures such as divergence and shape mismatches).
"""


class LeafcnnError(Exception):
    exit_code = 1


class ValidationError(LeafcnnError):
    exit_code = 3


class StorageError(LeafcnnError):
    exit_code = 2


class NumericError(LeafcnnError):
    exit_code = 4


class NoClassesError(ValidationError):
    """Dataset root contains no class subdirectories."""


class EmptyClassError(ValidationError):
    """A class subdirectory contains no decodable images."""


class ClassTooSmallError(ValidationError):
    """A class has too few records to split."""


class IndexOutOfRangeError(ValidationError):
    """Label index outside [0, num_classes)."""


class ManifestFormatError(ValidationError):
    """Malformed manifest or summary CSV."""


class MissingInputError(ValidationError):
    """A referenced input file or directory does not exist."""


class ConfigError(ValidationError):
    """Bad run configuration or command-line usage."""


class DecodeError(ValidationError):
    """A file could not be decoded as an image."""


class UnsupportedFormatError(ValidationError):
    """Image has an unsupported channel layout."""


class InvalidKernelError(ValidationError):
    """Filter kernel is even, non-positive or larger than the image."""


class InvalidSizeError(ValidationError):
    """Requested output size is not positive."""


class EmptyInputError(ValidationError):
    """Operation received an empty tensor."""


class InvalidRangeError(ValidationError):
    """Normalization range has n_max <= n_min."""


class InvalidArchitectureError(ValidationError):
    """Layer stack does not compose over the declared input shape."""


class EmptyDatasetError(ValidationError):
    """Training requires at least one sample."""


class LengthMismatchError(ValidationError):
    """Paired label lists have different lengths."""


class InvalidLabelError(ValidationError):
    """Class label outside the confusion matrix range."""


class EmptyCountsError(ValidationError):
    """All-zero TP/TN/FP/FN counts."""


class InvalidRatioError(ValidationError):
    """Ratio outside [0, 1] passed to percentage rendering."""


class InvalidShapeError(NumericError):
    """Tensor shapes inconsistent with the operation or checkpoint."""


class DivergedError(NumericError):
    """Training loss became non-finite."""
