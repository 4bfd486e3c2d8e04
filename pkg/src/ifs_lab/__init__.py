"""Random iterated function systems: orbits, chains, and Monte Carlo checks."""

__version__ = "0.1.0"
