"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad or unknown configuration keys/values (CLI exit code 2)."""


class FormatError(Exception):
    """Corrupt or mismatched container file (CLI exit code 3)."""


class NumericError(Exception):
    """Numeric failure: singular solve, non-finite values (CLI exit code 4)."""
