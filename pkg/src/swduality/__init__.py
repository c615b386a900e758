"""Finite, exact and numerical checks of the duality structures of Smale spaces."""

__version__ = "0.1.0"
REPORT_SCHEMA_VERSION = 1
