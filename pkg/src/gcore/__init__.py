"""Simulation toolkit for controlled order rearrangement encryption with entangled carriers."""
from .errors import ConfigError, DomainError, GCOREError, ProtocolError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DomainError", "GCOREError", "ProtocolError", "__version__"]
