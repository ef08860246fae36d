"""Training-free empirical flow-matching samplers and their kinetic energetics."""

__all__ = ["__version__"]

__version__ = "0.1.0"
