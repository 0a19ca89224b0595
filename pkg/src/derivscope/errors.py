"""Exception types shared across the toolkit.

The CLI maps DataError (and file-not-found) to exit code 2; argparse usage
problems exit 1. Everything else is a bug.
"""


class DerivscopeError(Exception):
    """Base class for all errors raised by this package."""


class DataError(DerivscopeError):
    """An input file or in-memory record violates its contract."""


class ConfigError(DerivscopeError):
    """An option combination or bundled resource is invalid."""


class AlignmentError(DataError):
    """Parallel files disagree on line counts."""


class SchemaError(DataError):
    """A delimited or JSON-lines file does not match its schema."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class TreeFormatError(DataError):
    """An encoded derivation tree is malformed; ``where`` locates the node."""

    def __init__(self, message, where="$"):
        super().__init__(f"{message} (at {where})")
        self.where = where


class RootLabelError(DataError):
    """A root-condition label is not in the configured mapping."""


class MissingResultError(DataError):
    """A parse result is missing for an example id."""


class DegenerateRowError(DataError):
    """A feature row cannot be computed (empty output, log-prob of 0)."""


class UndefinedCorrelationError(DataError):
    """Pearson's r is undefined (zero variance or single-class labels)."""


class IncompleteAnnotationError(DataError):
    """A non-excluded annotation record is missing its judgment."""


class InventoryError(DataError):
    """A rule label is absent from the rule inventory in use."""


class GrammarError(ConfigError):
    """The bundled toy grammar file is malformed."""


class BackendStartError(DerivscopeError):
    """An external parser backend could not be launched."""
