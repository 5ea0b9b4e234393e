"""Shared exception types."""

__all__ = ["ConfigError", "ProtocolError", "UndefinedMetricError"]


class ConfigError(ValueError):
    """Invalid configuration value or inconsistent configuration section."""


class ProtocolError(RuntimeError):
    """Handshake FSM driven out of the (threshold -> clamp -> release)* order."""


class UndefinedMetricError(RuntimeError):
    """A trace does not support the requested metric (no peaks, no decay, ...)."""
