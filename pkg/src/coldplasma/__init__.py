"""Mixed elliptic-hyperbolic boundary value problems for the cold plasma model."""

__version__ = "0.1.0"
