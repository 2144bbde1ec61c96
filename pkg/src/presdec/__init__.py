"""Monadic and variadic decomposition of Presburger formulas."""

__version__ = "0.1.0"
