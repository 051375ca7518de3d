"""Stochastic Camassa-Holm solitons under pure-jump Marcus noise."""

__version__ = "0.1.0"
