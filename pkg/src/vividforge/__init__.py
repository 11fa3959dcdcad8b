"""Dataset construction and evaluation engine for mask-guided video local editing."""

__version__ = "0.1.0"
