"""
Exception hierarchy for cubelab

Validation errors also derive from ValueError so callers that only guard
against bad input keep working.
"""


class CubelabError(Exception):
    """Base class for every error raised by cubelab"""


class EmptyOrbitError(CubelabError, ValueError):
    """Requested an orbit of length zero"""


class InsufficientDataError(CubelabError, ValueError):
    """An external sequence is shorter than requested or malformed"""


class OrbitLengthError(CubelabError, ValueError):
    """An orbit is too short for the requested horizon"""

    def __init__(self, role: str, needed: int, actual: int):
        super().__init__(
            f"orbit '{role}' has length {actual}, at least {needed} samples are needed"
        )
        self.role = role
        self.needed = needed
        self.actual = actual


class WindowError(CubelabError, ValueError):
    """Windowed average called with M >= N"""


class CostGuardError(CubelabError, ValueError):
    """A naive evaluation would exceed the configured term budget"""


class ParameterError(CubelabError, ValueError):
    """A numeric parameter is outside its admissible range"""


class NoFactorDataError(CubelabError, ValueError):
    """No factor projections are known for the system kind"""


class ConfigValidationError(CubelabError, ValueError):
    """Experiment configuration failed validation"""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ConfigParseError(CubelabError, ValueError):
    """Experiment configuration file could not be parsed"""

    def __init__(self, path: str, line: int, column: int, message: str):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.line = line
        self.column = column


class UsageError(CubelabError):
    """Invalid command line usage"""


class NumericTaskError(CubelabError):
    """A numeric task produced an inconsistent result"""


class TaskError(CubelabError):
    """A task failed; the underlying error is chained as __cause__"""

    def __init__(self, task: str, check: str | None, message: str):
        context = f"task={task}" if check is None else f"task={task}, check={check}"
        super().__init__(f"{context}: {message}")
        self.task = task
        self.check = check
