"""Minitwistor surfaces, Severi varieties of nodal rational curves and their Einstein-Weyl geometry."""

__version__ = "0.1.0"
