"""Numerical laboratory for singular solutions of the real and complex
Monge-Ampere equations and the critical Sobolev/Orlicz estimates around them."""

__version__ = "0.1.0"
