"""Integrability tools for magnetization-conserving brickwork qubit circuits."""

__version__ = "0.1.0"
