"""Time-changed Levy SDEs and distributed-order fractional Kolmogorov equations."""

__version__ = "0.1.0"
