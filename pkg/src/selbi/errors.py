"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3 and numeric failures with 4. Plain
``ValueError`` is reserved for programming errors in direct API use
(bad argument domains); it is reported as a configuration problem when
it escapes to the CLI.
"""

from __future__ import annotations


class SelbiError(Exception):
    """Base class for package errors."""


class ConfigError(SelbiError):
    """Invalid or inconsistent configuration input."""

    exit_code = 2


class DataError(SelbiError):
    """Input data that cannot be used as requested."""

    exit_code = 3


class EncodingError(DataError):
    """Raw records cannot be encoded into the fixed network layout."""


class CheckpointError(DataError):
    """A model checkpoint is missing, corrupt or incompatible."""


class InsufficientSampleError(DataError):
    """Too few records survive selection to continue."""


class NumericError(SelbiError):
    """A numeric routine failed to produce a usable result."""

    exit_code = 4


class ConvergenceError(NumericError):
    """An iterative routine exhausted its iteration budget."""


class EstimationError(NumericError):
    """An estimator produced a degenerate result (NaN, empty posterior)."""
