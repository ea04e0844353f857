"""Exception types shared across the package."""


class WfpredError(Exception):
    """Base class for every error raised on purpose by this package."""


class TraceFormatError(WfpredError, ValueError):
    """A trace row could not be parsed."""

    def __init__(self, message, column=None, row=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.column = column
        self.row = row


class ContractError(WfpredError, ValueError):
    """A precondition of an operation was violated."""


class SchemaMismatchError(WfpredError, ValueError):
    """Model, schema and data do not belong together."""


class ModelFormatError(WfpredError, ValueError):
    """A persisted model or schema file is corrupt or has the wrong version."""


class CalibrationError(WfpredError, RuntimeError):
    """Generator calibration did not reach its targets."""

    def __init__(self, message, stats=None, config=None):
        super().__init__(message)
        self.stats = stats
        self.config = config


class ConvergenceWarning(UserWarning):
    """An iterative optimizer stopped before reaching its tolerance."""
