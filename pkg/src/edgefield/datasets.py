"""Bundled test data."""

from __future__ import annotations

from importlib import resources

from .grid import PixelGrid, read_pgm


def load_terrace() -> PixelGrid:
    """256x256 grayscale test scene (terraced ground with scattered stones),
    generated deterministically by scripts/make_test_image.py."""
    data = resources.files("edgefield.data").joinpath("terrace.pgm").read_bytes()
    return read_pgm(data)
