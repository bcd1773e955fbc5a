"""Simulation and analysis of a cross-Kerr coupled qubit readout."""

__version__ = "0.1.0"
