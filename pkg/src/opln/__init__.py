"""Aperiodic poling design for spectrally pure SPDC in lithium niobate."""

__version__ = "0.1.0"
