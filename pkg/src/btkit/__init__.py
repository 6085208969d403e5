"""Back-translation toolkit for low-resource machine translation."""

__version__ = "0.1.0"
