"""Exception hierarchy. Everything raised on bad data derives from MobiflowError."""


class MobiflowError(Exception):
    pass


class ParseError(MobiflowError, ValueError):
    """Malformed input table. ``row``/``column`` are 1-based positions in the file when known."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class RangeError(ParseError):
    pass


class NegativeFlowError(ParseError):
    pass


class CentroidConflictError(ParseError):
    pass


class DegenerateScaleError(MobiflowError, ValueError):
    pass


class UndefinedCorrelationError(MobiflowError, ValueError):
    def __init__(self, message, shift=None):
        if shift is not None:
            message = f"{message} (shift {shift} days)"
        super().__init__(message)
        self.shift = shift


class InsufficientOverlapError(MobiflowError, ValueError):
    pass


class UnknownWeekError(MobiflowError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NonConvergenceError(MobiflowError, RuntimeError):
    """Label propagation hit the sweep cap; ``partition`` holds the last state."""

    def __init__(self, message, partition=None, run=None):
        if run is not None:
            message = f"{message} (run {run})"
        super().__init__(message)
        self.partition = partition
        self.run = run


class MissingCentroidError(MobiflowError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""
