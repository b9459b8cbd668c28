"""Exception types.  The CLI maps each family onto an exit code."""


class GenderSignalError(Exception):
    exit_code = 1


class ConfigurationError(GenderSignalError, ValueError):
    """Bad parameters or an impossible setup (usage error)."""

    exit_code = 1


class PrerequisiteError(ConfigurationError):
    """A pipeline stage was run before the stage it depends on."""

    def __init__(self, stage: str, needs: str):
        super().__init__(f"stage {stage!r} needs the outputs of {needs!r}; run `{needs}` first")
        self.stage = stage
        self.needs = needs


class DataError(GenderSignalError):
    """Unreadable or invalid input data."""

    exit_code = 2

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ParseError(DataError):
    """A single malformed record; recoverable, the pipeline skips it."""


class NumericError(GenderSignalError, ArithmeticError):
    exit_code = 3
