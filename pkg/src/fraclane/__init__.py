"""Desk-scale numerics for singular solutions of fractional Lane-Emden equations."""

__version__ = "0.1.0"
