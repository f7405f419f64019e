"""Exception hierarchy; every error knows the CLI exit code it maps to."""

import config


class GlaError(Exception):
    exit_code = config.EXIT_UNEXPECTED


class ConfigError(GlaError, ValueError):
    """A parameter is outside the range the receiving stage accepts."""
    exit_code = config.EXIT_BAD_CONFIG


class InputError(GlaError, ValueError):
    """The event data itself is unusable (empty, too short, bad codes)."""
    exit_code = config.EXIT_INPUT_ERROR


class NumericalError(GlaError, ArithmeticError):
    exit_code = config.EXIT_NUMERICAL


class StageError(GlaError):
    """Failure inside one pipeline stage, carrying the stage name and cause."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", config.EXIT_UNEXPECTED)
        super().__init__(f"stage '{stage}' failed: {cause}")
