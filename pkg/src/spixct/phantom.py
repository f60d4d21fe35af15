"""Test images: Shepp-Logan head, disks, Gaussians and general ellipse sets.

All generators sample at pixel centers (no area averaging).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import InvalidArgument
from .fileio import read_image, write_image, write_pgm
from .grid import Grid, ImageGrid

__all__ = [
    "EllipseSpec", "shepp_logan_table", "ellipse_image", "generate_shepp_logan",
    "generate_disk", "generate_gaussian", "read_image", "write_image", "write_pgm",
]

MIN_PHANTOM_PIXELS = 8
GAUSSIAN_CUTOFF = 1e-12


@dataclass(frozen=True)
class EllipseSpec:
    """One ellipse: ``center`` and ``semi_axes`` are physical, ``rotation`` in radians."""

    center: tuple
    semi_axes: tuple
    rotation: float
    additive_intensity: float

    def __post_init__(self):
        a, b = self.semi_axes
        if not (a > 0 and b > 0):
            raise InvalidArgument(f"semi-axes must be positive, got {self.semi_axes}")

    def contains(self, x, y):
        """Boolean mask of points inside or on the ellipse."""
        cx, cy = self.center
        a, b = self.semi_axes
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        dx, dy = x - cx, y - cy
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return (u / a) ** 2 + (v / b) ** 2 <= 1.0

    def scaled(self, factor):
        """Same ellipse with all lengths multiplied by ``factor``."""
        (cx, cy), (a, b) = self.center, self.semi_axes
        return EllipseSpec((cx * factor, cy * factor), (a * factor, b * factor),
                           self.rotation, self.additive_intensity)


@lru_cache(maxsize=1)
def shepp_logan_table():
    """The ten head-phantom ellipses for a domain of half width 1.

    Read from the packaged ``data/shepp_logan.csv`` fixture.
    """
    text = resources.files("spixct").joinpath("data/shepp_logan.csv").read_text()
    rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    return tuple(
        EllipseSpec((float(r["center_x"]), float(r["center_y"])),
                    (float(r["semi_axis_a"]), float(r["semi_axis_b"])),
                    math.radians(float(r["rotation_deg"])),
                    float(r["intensity"]))
        for r in rows)


def ellipse_image(grid: Grid, ellipses) -> ImageGrid:
    """Sum of the ellipses' intensities at each pixel center.

    Sums are rounded to 12 decimals so that cancelling intensities (such as
    ``1.0 - 0.8 - 0.2``) give exact zeros rather than representation noise.
    """
    X, Y = grid.coordinates()
    out = np.zeros(grid.shape)
    for e in ellipses:
        out[e.contains(X, Y)] += e.additive_intensity
    return ImageGrid(grid, np.round(out, 12) + 0.0)


def _check_size(n_pixels):
    if int(n_pixels) != n_pixels or n_pixels < MIN_PHANTOM_PIXELS:
        raise InvalidArgument(f"n_pixels must be an integer >= {MIN_PHANTOM_PIXELS}, got {n_pixels}")


def generate_shepp_logan(n_pixels: int, half_width: float = 1.0) -> ImageGrid:
    """Head phantom scaled to the square ``[-half_width, half_width]^2``.

    Examples
    --------
    >>> img = generate_shepp_logan(101)
    >>> float(img.values[50, 50])
    0.2
    """
    _check_size(n_pixels)
    grid = Grid(int(n_pixels), half_width)
    return ellipse_image(grid, [e.scaled(grid.half_width) for e in shepp_logan_table()])


def generate_disk(n_pixels: int, half_width: float = 1.0, radius: float = 0.5,
                  amplitude: float = 1.0) -> ImageGrid:
    """``amplitude`` on the centered closed disk of ``radius``, zero elsewhere."""
    _check_size(n_pixels)
    if not 0 < radius <= half_width:
        raise InvalidArgument(f"radius must lie in (0, half_width], got {radius}")
    grid = Grid(int(n_pixels), half_width)
    X, Y = grid.coordinates()
    return ImageGrid(grid, np.where(X**2 + Y**2 <= radius**2, float(amplitude), 0.0))


def generate_gaussian(n_pixels: int, half_width: float = 1.0, sigma: float = 0.15,
                      amplitude: float = 1.0) -> ImageGrid:
    """Centered Gaussian bump, set to zero where it falls below 1e-12 of its peak."""
    _check_size(n_pixels)
    if not sigma > 0:
        raise InvalidArgument(f"sigma must be positive, got {sigma}")
    grid = Grid(int(n_pixels), half_width)
    X, Y = grid.coordinates()
    shape = np.exp(-(X**2 + Y**2) / (2.0 * sigma**2))
    return ImageGrid(grid, np.where(shape >= GAUSSIAN_CUTOFF, amplitude * shape, 0.0))
