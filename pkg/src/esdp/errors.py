"""Exception hierarchy shared by all esdp modules."""


class EsdpError(Exception):
    """Base class for all esdp failures."""


class ConfigurationError(EsdpError):
    """Invalid source configuration (duplicate ids, bad kinds, bad options)."""


class SourceUnavailableError(EsdpError):
    """A declared source root does not exist or cannot be read."""


class EmptyCorpusError(EsdpError):
    """No usable input: every source unavailable, or no transactions."""


class ClockSkewError(EsdpError):
    """A staleness check was asked about a time before the manifest was built."""


class StoreError(EsdpError):
    """Base class for repository persistence failures."""


class XmlFormatError(StoreError):
    """Malformed XML or a document violating the strict schema."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class SchemaVersionError(StoreError):
    """Document declares a schema version this reader does not know."""


class CorruptRepositoryError(StoreError):
    """A stored repository violates its own invariants."""


class ConsistencyError(StoreError):
    """Refusing to write a model that violates its invariants."""


class EmptyQueryError(EsdpError):
    """The user query is blank after trimming."""


class RecordFormatError(EsdpError):
    """A pre-abstracted records file has a malformed or unknown field."""
