"""Fidelity diagnostics of mixed-state symmetry breaking on small dense systems."""

__version__ = "0.1.0"
