"""Exception hierarchy shared across the library.

The CLI maps these onto exit codes, so raising the right class matters:
ConfigError -> 1, DataError -> 2, ShapeError / NumericError -> 3.
"""


class SlimRnnError(Exception):
    """Base class for all library errors."""


class ShapeError(SlimRnnError):
    """Operands have incompatible shapes. Message names both shapes."""


class ConfigError(SlimRnnError):
    """Invalid configuration: bad variant, bad hyperparameter, unknown key."""


class DataError(SlimRnnError):
    """Dataset ingestion or preparation failed."""


class NumericError(SlimRnnError):
    """Non-finite value where a finite one is required (divergence, bad loss)."""
