"""Deterministic interpreter, protocol checker, and runtime monitor for
channel-based message passing."""

__version__ = "0.1.0"
