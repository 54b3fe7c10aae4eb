"""Sleeping-cell detection from MDT event sequences.

Pipeline: synthetic MDT datasets -> sliding-window sub-calls -> 2-gram
counts -> minor-component embedding -> k-NN anomaly scores -> per-cell
sleeping-cell histograms, labels and evaluation metrics.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError

__all__ = ["ConfigError", "DataError", "__version__"]
