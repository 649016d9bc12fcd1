"""Exception types shared across the pipeline."""


class CrowdzoneError(Exception):
    """Base class for all pipeline errors."""


class InvalidSpecError(CrowdzoneError, ValueError):
    """Work-zone spec violates its invariants."""


class ParseError(CrowdzoneError, ValueError):
    """A file could not be parsed; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyDataError(CrowdzoneError, ValueError):
    """An operation requiring data received none."""


class DegenerateDataError(CrowdzoneError, ValueError):
    """Too few distinct points for the requested number of components."""


class SingularCovarianceError(CrowdzoneError, ValueError):
    """Covariance determinant below the regularization floor."""


class GridMismatchError(CrowdzoneError, ValueError):
    """Two grids disagree on origin, resolution, or dimensions."""


class NoFreeCellsError(CrowdzoneError, ValueError):
    """Predicted grid has no free cells; precision is undefined."""


class GoalOccupiedError(CrowdzoneError, ValueError):
    """Heuristic goal cell lies in an occupied cell."""


class StartOrGoalOccupiedError(CrowdzoneError, ValueError):
    """Planner start or goal pose lies in an occupied cell."""


class NoPathError(CrowdzoneError, RuntimeError):
    """Search exhausted the open set without reaching the goal."""


class EmptyPathError(CrowdzoneError, ValueError):
    """An operation requiring a non-empty path received none."""


class EmptyTraceError(CrowdzoneError, ValueError):
    """An operation requiring a non-empty trace received none."""


class MissingArtifactError(CrowdzoneError, FileNotFoundError):
    """A pipeline stage input file does not exist."""

    def __init__(self, path, hint=""):
        message = f"missing artifact: {path}"
        if hint:
            message += f" ({hint})"
        super().__init__(message)
        self.path = str(path)


class ConfigError(CrowdzoneError, ValueError):
    """Pipeline configuration failed to parse or validate."""
