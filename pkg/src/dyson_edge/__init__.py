"""Simulation and verification toolkit for multilevel beta Dyson Brownian motion edges."""
__version__ = "0.1.0"
