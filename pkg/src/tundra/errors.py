"""Exception types shared across the engine, pipeline, and tooling layers."""


class TundraError(Exception):
    """Base class for all errors raised by this package."""


# --- dataset / plan construction ---

class SchemaMismatch(TundraError):
    pass


class InvalidPartitionCount(TundraError):
    pass


class UnknownColumn(TundraError):
    pass


class UnhashableKey(TundraError):
    pass


# --- execution ---

class JobError(TundraError):
    """A partition task failed during execution.

    Carries the partition index and the underlying cause so callers can tell
    which slice of the data broke.
    """

    def __init__(self, message, partition=None, cause=None):
        super().__init__(message)
        self.partition = partition
        self.cause = cause


class OutOfBounds(TundraError):
    pass


# --- pipeline API ---

class MissingColumn(TundraError):
    pass


class FitError(TundraError):
    pass


class UnknownStageName(TundraError):
    pass


class CorruptStageFile(TundraError):
    pass


class UnknownParamKind(TundraError):
    pass


class DuplicateStage(TundraError):
    pass


class ParamError(TundraError):
    """A parameter value does not match its declared kind."""


# --- tensor graph ---

class BadMagic(TundraError):
    pass


class ChecksumMismatch(TundraError):
    pass


class ShapeInconsistency(TundraError):
    pass


class UnknownOp(TundraError):
    pass


class UnknownNode(TundraError):
    pass


class ShapeMismatch(TundraError):
    pass


class VectorSizeMismatch(TundraError):
    pass


class NoJobYet(TundraError):
    pass


# --- images ---

class UnsupportedFormat(TundraError):
    pass


class MalformedHeader(TundraError):
    pass


class TruncatedData(TundraError):
    pass


class CropOutOfBounds(TundraError):
    pass


class BadChainSpec(TundraError):
    pass


# --- learners ---

class DimensionMismatch(TundraError):
    pass


class NonBinaryLabel(TundraError):
    pass


class RaggedVector(TundraError):
    pass


class DegenerateLabels(TundraError):
    pass


# --- model repository ---

class UnknownModel(TundraError):
    pass


class SourceUnavailable(TundraError):
    pass


class MalformedManifest(TundraError):
    pass
