"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A numeric argument or configuration value is out of its valid range."""


class UnsupportedOrderError(ValueError):
    """Requested correlation order is not one of the supported orders."""


class UnsupportedConfigurationError(ValueError):
    """The requested shortcut does not apply to this channel configuration."""


class ConfigError(ValueError):
    """A config or PDP file could not be parsed or validated."""

    def __init__(self, message, *, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field
