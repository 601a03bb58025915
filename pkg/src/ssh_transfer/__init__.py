"""Counterdiabatic state transfer in SSH chains driven by NNN couplings."""

__version__ = "0.1.0"
