"""Doubly robust Granger causality discovery for panels of time series."""

__version__ = "0.1.0"
