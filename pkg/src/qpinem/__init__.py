"""Electron spectra after interaction with a quantized optical mode."""

__version__ = "0.1.0"
