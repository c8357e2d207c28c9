"""partsketch: sketch-driven retrieval and assembly of 3D model parts."""

__version__ = "0.1.0"
