"""Near-level energy statistics of directed polymers in random environments."""

__version__ = "0.1.0"
