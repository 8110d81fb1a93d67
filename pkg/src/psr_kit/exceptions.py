"""Exception hierarchy for psr-kit.

``ValidationError`` covers bad configuration and contract violations that are
detectable before any real work starts (CLI exit code 2); everything else
derived from ``PsrKitError`` is a runtime failure (CLI exit code 1).
"""


class PsrKitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(PsrKitError):
    """Invalid configuration, argument, or input contract violation."""


class ManifestError(ValidationError):
    """Manifest file is malformed or references missing data."""


class AlignmentError(ValidationError):
    """Views could not be aligned to a shared utterance set."""


class FeatureFormatError(PsrKitError):
    """A feature file violates the on-disk format."""


class BadMagicError(FeatureFormatError):
    """File does not start with the feature format magic bytes."""


class UnsupportedVersionError(FeatureFormatError):
    """Feature file declares a format version or dtype we cannot read."""


class TruncatedPayloadError(FeatureFormatError):
    """Feature file payload is shorter than its header claims."""


class NonFiniteValueError(FeatureFormatError):
    """Feature data contains NaN or infinite values."""


class AudioFormatError(PsrKitError):
    """WAV file is malformed or uses an unsupported encoding."""


class SolverError(PsrKitError):
    """A linear-algebra subproblem is unsolvable as posed (e.g. singular
    Gram matrix with zero ridge)."""


class TrainingDivergedError(PsrKitError):
    """Optimization produced a non-finite objective."""
