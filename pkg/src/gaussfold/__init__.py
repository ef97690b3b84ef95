"""Exact simulation of an all-passive optical circuit fed by two-mode squeezed vacua,
and Metropolised independence sampling of the Gaussian circuit it emulates."""

__version__ = "0.1.0"
