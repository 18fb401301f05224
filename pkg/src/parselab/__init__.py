"""Neural transition-based dependency parsing laboratory."""

__version__ = "0.1.0"
