"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 2,
numeric failures exit 3.
"""


class DimensionError(ValueError):
    """A tensor arrived with a shape a layer or model cannot accept."""


class ValidationError(ValueError):
    """A dataset, manifest, config, or target failed a contract check."""


class NumericError(ArithmeticError):
    """A non-finite value (NaN/Inf) showed up where finite math is required."""
