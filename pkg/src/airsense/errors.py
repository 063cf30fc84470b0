"""Exception types shared across the package.

Plain ``ValueError`` is used for bad arguments; the classes here cover
failures that callers may want to catch selectively (I/O formats, numeric
conditioning, storage integrity, protocol violations).
"""


class AirsenseError(Exception):
    """Base class for all package-specific errors."""


class CsvFormatError(AirsenseError):
    """A CSV stream has a malformed header or row structure."""


class RowValidationError(CsvFormatError):
    """A single CSV data row failed validation.

    Carries the 1-based line number and the offending field name so ingest
    failures can be reported precisely instead of silently dropped.
    """

    def __init__(self, line_no: int, field: str, message: str):
        super().__init__(f"line {line_no}: field '{field}': {message}")
        self.line_no = line_no
        self.field = field


class ConditioningError(AirsenseError):
    """A linear system or optimization could not be solved reliably."""


class StoreError(AirsenseError):
    """A data root is missing a required file or manifest entry."""


class CorruptionError(AirsenseError):
    """File contents do not match the hash recorded in the manifest."""


class IntegrityError(AirsenseError):
    """Referential integrity violated (dangling ids between datasets)."""


class SnapshotExistsError(AirsenseError):
    """A snapshot name is already taken; snapshots are write-once."""


class SnapshotNotFoundError(AirsenseError):
    """No snapshot recorded under the requested name."""


class FlProtocolError(AirsenseError):
    """A federated-round message violates the protocol (e.g. dimension mismatch)."""
