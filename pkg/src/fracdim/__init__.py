"""Box dimension and the fractal-structure dimension models I-VI."""

__version__ = "0.1.0"
