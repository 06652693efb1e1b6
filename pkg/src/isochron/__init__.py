"""Exact and numeric tools for isochronous centers of reducible planar systems."""

__version__ = "0.1.0"
