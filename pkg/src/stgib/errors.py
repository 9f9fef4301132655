"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An array has the wrong shape for the operation it was passed to."""


class ConfigError(ValueError):
    """An experiment or model configuration is invalid."""


class NumericalError(RuntimeError):
    """Training or evaluation produced a non-finite quantity."""


class CheckpointError(RuntimeError):
    """A checkpoint file is missing, corrupted, or of an unknown version."""
