"""Exception types raised across the package."""


class DataError(ValueError):
    """Malformed or incomplete input data.

    ``line`` is the 1-based line number in the source file when known.
    """

    def __init__(self, message, *, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ConsistencyError(RuntimeError):
    """Internal bookkeeping contradiction, e.g. a contract not backed by the storage policy."""


class NumericError(RuntimeError):
    """A numerical routine failed to converge or lost its bracket."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class LPInfeasibleError(RuntimeError):
    """Linear program has no feasible point.

    ``violations`` lists (row_kind, row_index, amount) triples from the
    minimum-violation relaxation, largest first.
    """

    def __init__(self, message, violations=()):
        self.violations = list(violations)
        super().__init__(message)


class LPUnboundedError(RuntimeError):
    """Linear program is unbounded; ``ray`` is a feasible descent direction."""

    def __init__(self, message, ray=None):
        self.ray = ray
        super().__init__(message)
