"""Simulation toolkit for multiplexed photon-number-resolving (MPNR) detectors."""

__version__ = "0.1.0"
