"""Leader-follower formation simulation with optical sensing and communication."""

__version__ = "0.1.0"
