"""Overlapping Schwarz waveform relaxation for the 1-d two-electron problem."""

__version__ = "0.1.0"
