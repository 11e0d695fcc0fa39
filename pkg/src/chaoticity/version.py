"""Single source for the tool version embedded in result metadata."""

__version__ = "0.1.0"
