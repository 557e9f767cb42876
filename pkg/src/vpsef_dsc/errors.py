"""Shared exception types."""


class ConfigError(ValueError):
    """A scenario, controller, or simulation configuration is invalid."""
