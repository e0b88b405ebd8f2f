"""Extension operators on product balls and sampled verification of their geometry."""

__version__ = "0.1.0"
