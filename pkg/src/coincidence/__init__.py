"""Size-principle concept learning for the number game and the city game."""

__version__ = "0.1.0"
