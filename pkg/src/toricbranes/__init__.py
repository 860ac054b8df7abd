"""Central charges of branes on toric Calabi-Yau stacks: A-side periods, B-side Gamma series."""

__version__ = "0.1.0"
