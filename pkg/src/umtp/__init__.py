"""Samplers and empirical checks for unimodular random rooted networks."""

__version__ = "0.1.0"
