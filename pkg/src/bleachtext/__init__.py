"""Cross-lingual gender prediction from bleached (abstracted) text."""

__version__ = "0.1.0"
