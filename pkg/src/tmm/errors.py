"""Error types shared across the engine.

Every error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can map failures one-to-one.
"""


class TmmError(Exception):
    code = "TmmError"

    def __init__(self, message=""):
        super().__init__(message or self.code)


# mesh / serialization
class IndexOutOfRange(TmmError):
    code = "IndexOutOfRange"


class NonFiniteCoordinate(TmmError):
    code = "NonFiniteCoordinate"


class MalformedDocument(TmmError):
    code = "MalformedDocument"


class SchemaViolation(TmmError):
    code = "SchemaViolation"


class UnsupportedVersion(TmmError):
    code = "UnsupportedVersion"


# registry
class CapacityExceeded(TmmError):
    code = "CapacityExceeded"


class NotFound(TmmError):
    code = "NotFound"


class StorageFailure(TmmError):
    code = "StorageFailure"


class OrdinalOutOfRange(TmmError):
    code = "OrdinalOutOfRange"


# measurement
class NoHit(TmmError):
    code = "NoHit"


# transforms
class NotARotation(TmmError):
    code = "NotARotation"


class DegenerateConfiguration(TmmError):
    code = "DegenerateConfiguration"


class NonPositiveScale(TmmError):
    code = "NonPositiveScale"


# ranker
class MissingValue(TmmError):
    code = "MissingValue"


class NonPositiveValue(TmmError):
    code = "NonPositiveValue"


# scenarios
class AssertionFailed(TmmError):
    code = "AssertionFailed"
