"""Pixel lattice and the two array containers living on it.

The lattice is the square ``[-half_width, half_width]^2`` sampled at ``n``
pixel centers per side, spacing ``2 * half_width / (n - 1)``. Row 0 is the top
(``y = +half_width``), column 0 the left edge (``x = -half_width``).

The support domain is the inscribed disk of radius ``support_radius``
(default ``0.95 * half_width``); the observation domain is the whole square.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

DEFAULT_SUPPORT_FRACTION = 0.95


@dataclass(frozen=True)
class Grid:
    """Geometry of an ``n x n`` pixel lattice (no values)."""

    n: int
    half_width: float = 1.0
    support_radius: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidArgument(f"grid needs at least 2 pixels per side, got {self.n}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise InvalidArgument(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_width", float(self.half_width))
        if self.support_radius is None:
            object.__setattr__(self, "support_radius", DEFAULT_SUPPORT_FRACTION * self.half_width)
        elif not 0 < self.support_radius <= self.half_width:
            raise InvalidArgument("support_radius must lie in (0, half_width]")
        else:
            object.__setattr__(self, "support_radius", float(self.support_radius))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def shape(self):
        return (self.n, self.n)

    def axes(self):
        """Return ``(x, y)`` coordinate vectors: x by column, y by row."""
        # Half-integer multiples of the spacing keep t exactly antisymmetric.
        t = self.spacing * (np.arange(self.n) - (self.n - 1) / 2)
        return t, -t

    def coordinates(self):
        """Return ``(X, Y)`` arrays of pixel-center coordinates."""
        x, y = self.axes()
        return np.meshgrid(x, y)

    def support_mask(self) -> np.ndarray:
        X, Y = self.coordinates()
        return X**2 + Y**2 <= self.support_radius**2

    def zeros(self) -> "ImageGrid":
        return ImageGrid(self, np.zeros(self.shape))


def _frozen_array(values, shape):
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise InvalidArgument(f"values have shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument("values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """A real function sampled at the pixel centers of ``grid``."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, self.grid.shape))

    @property
    def n_pixels_per_side(self) -> int:
        return self.grid.n

    @property
    def half_width(self) -> float:
        return self.grid.half_width

    @property
    def pixel_spacing(self) -> float:
        return self.grid.spacing

    def with_values(self, values) -> "ImageGrid":
        return ImageGrid(self.grid, values)

    def is_supported(self, atol=0.0) -> bool:
        """True when every value outside the support disk is (near) zero."""
        outside = ~self.grid.support_mask()
        return bool(np.all(np.abs(self.values[outside]) <= atol))

    def __mul__(self, scalar):
        return ImageGrid(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Single-pixel data (``Kf`` or a derivative of it) on the image lattice."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, self.grid.shape))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)


def check_same_grid(a: Grid, b: Grid, what="grids"):
    if a.n != b.n or not np.isclose(a.half_width, b.half_width, rtol=1e-12, atol=0):
        raise InvalidArgument(f"{what} do not match: {a} vs {b}")
