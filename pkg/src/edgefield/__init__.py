"""Edge-field smoothing, block compression and segmentation for grayscale images."""

__version__ = "0.1.0"
