"""Exception hierarchy shared by the library, the CLI and the MCP tools."""


class SleapError(Exception):
    """Base class for all sleap errors"""
    pass


class ConfigurationError(SleapError):
    """Configuration error"""
    pass


class ModelParseError(SleapError):
    """Model file could not be parsed.

    Args:
        message: What went wrong
        line: 1-based line number in the model text, or None when the error
            concerns the network as a whole (e.g. no reactions declared)

    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SamplingError(SleapError):
    """Invalid arguments for a random variate draw"""
    pass


class SolverAbort(SleapError):
    """A trajectory could not be advanced (retry cap or Newton failure)"""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t:.6g})"
        super().__init__(message)


class EnsembleError(SleapError):
    """Ensemble inputs are inconsistent (empty samples, mismatched grids)"""
    pass


__all__ = [
    "ConfigurationError",
    "EnsembleError",
    "ModelParseError",
    "SamplingError",
    "SleapError",
    "SolverAbort",
]
