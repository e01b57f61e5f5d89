"""Affine and canonical quantization toolkit: spectra, coherent states, correspondence checks."""

__version__ = "0.1.0"
