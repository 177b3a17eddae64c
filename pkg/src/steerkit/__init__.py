"""Steering assemblage classification under local filters."""

__version__ = "0.1.0"
