"""Malicious Bayesian congestion games: exact models, equilibrium search, reductions and price-of-malice analysis."""

__version__ = "0.1.0"
