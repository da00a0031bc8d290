class DataError(ValueError):
    """Malformed or physically invalid input data."""


class ConfigError(ValueError):
    """Unknown key, bad value or unparseable configuration."""
