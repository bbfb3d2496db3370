"""Exception types shared across the package."""


class GCOREError(Exception):
    """Base class for all errors raised by :mod:`gcore`."""


class DomainError(GCOREError, ValueError):
    """An argument lies outside the domain of an operation."""


class ProtocolError(GCOREError):
    """A protocol run cannot proceed (missing particles, broken streams)."""


class ConfigError(GCOREError, ValueError):
    """A session or CLI configuration is invalid."""
