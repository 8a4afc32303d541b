"""Error types raised across the engine.

Everything user-facing derives from either ValueError (bad inputs,
bad configuration, malformed files) or RuntimeError (training blew up),
so callers can catch broadly or by the specific condition.
"""


class ShapeMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class DegenerateInputError(ValueError):
    """An input is numerically unusable, e.g. a zero-norm vector."""


class ContractViolationError(ValueError):
    """Caller-supplied quantities are mutually inconsistent."""


class LabelOverlapError(ValueError):
    """Class label sets that must be disjoint overlap."""


class PlanViolationError(ValueError):
    """Session data does not match the declared session plan."""


class TrainingDivergenceError(RuntimeError):
    """Loss or gradient became non-finite during training."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EpisodeExhausted(Exception):
    """Not enough unused samples remain to build another episode.

    Control-flow signal, not a failure: epoch generation stops here.
    """


class GenerationError(ValueError):
    """Synthetic data construction is infeasible for the requested spec."""


class ArchiveFormatError(ValueError):
    """Base class for malformed embedding archives."""


class BadMagicError(ArchiveFormatError):
    """File does not start with the archive magic bytes."""


class UnsupportedVersionError(ArchiveFormatError):
    """Archive declares a format version this reader does not know."""


class TruncatedArchiveError(ArchiveFormatError):
    """File ends before the declared payload does."""


class ChecksumMismatchError(ArchiveFormatError):
    """Stored payload checksum does not match the payload bytes."""


class ManifestError(ValueError):
    """Sidecar manifest is missing fields or inconsistent with the payload."""


class ConfigError(ValueError):
    """Invalid run configuration (unknown keys, out-of-range values)."""
