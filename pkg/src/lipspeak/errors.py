"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class ParseError(InvalidInputError):
    """Malformed data file. ``line`` is 1-based."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class NumericError(ArithmeticError):
    """Iteration failed to converge or produced non-finite values."""


class StageError(RuntimeError):
    """Failure inside one pipeline stage; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
