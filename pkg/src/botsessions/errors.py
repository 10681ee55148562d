"""Exception hierarchy shared by all modules."""


class BotSessionsError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(BotSessionsError):
    """Input line is not valid JSON."""


class SchemaError(BotSessionsError):
    """Input object is missing a required field or has the wrong shape."""


class ValidationError(BotSessionsError):
    """A field value violates a declared invariant."""


class ConfigError(BotSessionsError):
    """Configuration values are inconsistent or out of range."""


class DomainError(BotSessionsError):
    """An operation was called outside its domain (empty input, mixed users, ...)."""


class InsufficientDataError(BotSessionsError):
    """Not enough data points to run the requested statistic."""
