"""Case-based reasoning with abstract argumentation, with case relevance learnt from CART splits."""

__version__ = "0.1.0"
