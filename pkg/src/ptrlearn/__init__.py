"""Pool-based active learning on proper topological regions."""

__version__ = "0.1.0"
