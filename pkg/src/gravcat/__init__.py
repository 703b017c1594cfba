"""Simulation and feasibility estimates for probing gravitational cat states."""

__version__ = "0.1.0"
