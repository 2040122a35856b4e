"""Composition operators on one-circuit directed graphs, their Radon--Nikodym
derivatives, consistency families, and the moment-problem tools they rest on."""

__version__ = "0.1.0"
