"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: CorpusError -> 2 (data validation),
BackendError -> 3, ExpectationFailure -> 4. Everything else is a bug.
"""


class GaisiError(Exception):
    """Base class for all package errors."""


class CorpusError(GaisiError):
    """Malformed or inconsistent input data."""


class MalformedRowError(CorpusError):
    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DanglingReferenceError(CorpusError):
    def __init__(self, offenders, message="dangling references"):
        self.offenders = list(offenders)
        shown = ", ".join(map(str, self.offenders[:10]))
        more = "" if len(self.offenders) <= 10 else f" (+{len(self.offenders) - 10} more)"
        super().__init__(f"{message}: {shown}{more}")


class InvalidDistribution(CorpusError):
    """Probability vector too far from unit sum (beyond the 1e-3 repair band)."""

    def __init__(self, cell, total, message=None):
        self.cell = cell
        self.total = total
        super().__init__(message or f"distribution for {cell} sums to {total:.6f}, outside [0.999, 1.001]")


class ConfigError(GaisiError):
    """Invalid run or synthetic-generation configuration."""


class ParseError(GaisiError):
    """Unusable rater response; `span` is the (start, end) character range."""

    def __init__(self, message, span=None):
        self.span = span
        if span is not None:
            message = f"{message} [chars {span[0]}:{span[1]}]"
        super().__init__(message)


class MissingTask(ParseError):
    def __init__(self, task_id):
        self.task_id = task_id
        super().__init__(f"response contains no rating for task '{task_id}'")


class BackendError(GaisiError):
    """Chat backend unreachable, misconfigured, or persistently failing."""


class EstimationError(GaisiError):
    """Numerical estimation failure (rank, convergence, degenerate inputs)."""


class CollinearityError(EstimationError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"collinear regressors after FE absorption: {', '.join(self.columns)}")


class SeparationError(EstimationError):
    def __init__(self):
        super().__init__("coefficients diverging; outcome looks perfectly separated")


class UndefinedExposure(GaisiError):
    """Worker has zero total importance; exposure shares are undefined."""

    def __init__(self, worker_id):
        self.worker_id = worker_id
        super().__init__(f"worker '{worker_id}' has zero total task importance")


class ExpectationFailure(GaisiError):
    """A configured study expectation resolved to fail."""
