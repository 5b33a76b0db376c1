"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to, so failures
stay machine-distinguishable end to end.
"""


class CuesepError(Exception):
    """Base class; unexpected subtypes exit with code 1."""

    exit_code = 1


class ConfigError(CuesepError):
    """Invalid configuration value or violated config invariant."""

    exit_code = 2


class DataError(CuesepError):
    """Unreadable, malformed or out-of-contract input data."""

    exit_code = 3


class AlignmentError(CuesepError):
    """Audio chunk grid and visual cue stream cannot be reconciled."""

    exit_code = 4


class ShapeError(CuesepError):
    """Operands with incompatible shapes; message carries both shapes."""

    exit_code = 5


class NumericError(CuesepError):
    """NaN/Inf produced, or training diverged."""

    exit_code = 5


class VerificationError(CuesepError):
    """One or more verification suites failed."""

    exit_code = 6
