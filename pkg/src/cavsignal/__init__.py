"""Perturbative signalling between two Unruh-DeWitt detectors in a 1D cavity."""

__version__ = "0.1.0"
