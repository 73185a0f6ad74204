"""Error taxonomy shared across the package.

Each class maps to one process exit code in the CLI: configuration
problems exit 1, dataset problems exit 2, numerical failures exit 3.
"""


class ConfigError(ValueError):
    """Invalid architecture string, config file, or CLI arguments."""


class DataError(ValueError):
    """Malformed dataset, image file, or annotation record."""


class NumericError(ArithmeticError):
    """Non-finite loss, failed gradient check, or similar numeric fault."""
