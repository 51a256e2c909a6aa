"""Weakly coupled scale-invariant wave systems: regime algebra and simulation."""

__version__ = "0.1.0"
