# core/errors.py


class SLEError(Exception):
    """Base error for the solver; exit_code is the CLI category code."""

    exit_code = 2


class ConfigError(SLEError):
    """Invalid or unparsable configuration."""

    exit_code = 1


class GridError(ConfigError):
    """Degenerate interval or unsupported point count."""


class PotentialError(ConfigError):
    """Coupling potential failed its sign or derivative checks."""


class CFLViolationError(SLEError):
    """Time step exceeds the upwind stability bound in strict mode."""

    exit_code = 3


class NumericalError(SLEError):
    """Non-finite values or inconsistent array shapes."""

    exit_code = 4


class InvariantViolationError(SLEError):
    """A runtime monitor found a violated conservation law or bound."""

    exit_code = 5
