"""Exact-scale analysis and training harness for data-driven decoders of
small error-correcting codes."""

__version__ = "0.1.0"
