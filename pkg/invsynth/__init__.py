"""Universally quantified invariant synthesis by symbol elimination in local theory extensions."""

__version__ = "0.1.0"
