"""Exception types shared across the package.

Every error the library raises deliberately derives from WearPromptError so
the CLI can map processing failures to exit code 1 uniformly.
"""


class WearPromptError(Exception):
    """Base class for all errors raised by this package."""


class MaskFormatError(WearPromptError):
    """A mask file is unreadable or not an 8-bit grayscale PNG/PGM."""


class DimensionMismatchError(WearPromptError):
    """Two rasters that must share dimensions do not."""


class EmptyForegroundError(WearPromptError):
    """An operation that needs foreground pixels received none."""


class PromptSchemaError(WearPromptError):
    """A prompt bundle violates the JSON contract.

    The message starts with a JSON pointer to the offending field when the
    violation is local to one field.
    """


class StatisticsError(WearPromptError):
    """Degenerate input to a statistical routine (too few groups, zero variance)."""


class ConfigError(WearPromptError):
    """Invalid configuration value or dataset precondition."""
