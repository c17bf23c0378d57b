"""Exception types shared across the package."""


class ResromError(Exception):
    """Base class for package errors."""


class InvariantError(ResromError):
    """A domain type was constructed with invalid field values."""


class DatasetError(ResromError):
    """Dataset directory is malformed (missing manifest, files, ...)."""


class IntegrityError(DatasetError):
    """A stored array failed its checksum or header validation."""


class ConfigError(ResromError):
    """Run-configuration file is missing keys or holds invalid values."""


class ConvergenceError(ResromError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class CflError(ResromError):
    """Explicit saturation update violated stability limits at the
    smallest allowed sub-step."""


class GenerationError(ResromError):
    """Scenario generator exhausted its redraw budget."""


class DivergenceError(ResromError):
    """Training or rollout produced non-finite values."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index
