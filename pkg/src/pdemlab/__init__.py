"""Lewis-Riesenfeld invariants and canonical transformations for PDEM systems."""

__version__ = "0.1.0"
