"""Fractal-impedance tele-cooperation simulator."""

__version__ = "0.1.0"
