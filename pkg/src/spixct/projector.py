"""Discrete X-ray transform, its exact transposes, and a Riesz-potential oracle.

Two discretizations of the same line integral live here:

* the *sinogram* path, lines indexed by ``(angle, offset)`` with angles
  ``pi*k/n_angles`` in ``[0, pi)`` and, per angle, uniform offsets;
* the *pixel-ray* path, the line through every pixel center at every angle
  of the full circle, ``2*pi*k/n_angles_full``.

Both sample the bilinear interpolant of the image at the crossings of a
lattice with ``samples_per_pixel`` nodes per pixel along the line's dominant
axis; a line through a pixel center sees exactly the nodes the sinogram line
with offset ``x . theta_perp`` sees. Adjoints are algebraic transposes of
these sparse maps, never separate discretizations of the continuous formula.

Angle weights
-------------
Every angular integral over the unit circle is evaluated from the half
circle ``[0, pi)`` using ``Xf(x, theta) = Xf(x, theta + pi)``; the constant
:data:`HALF_CIRCLE_FACTOR` (= 2) is applied in exactly one place for each
path (``RayGeometry.sinogram_weights`` and the pixel-ray angle step).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from ._stencil import pixel_ray_stencils
from .errors import InvalidArgument
from .grid import Grid, ImageGrid, check_same_grid

HALF_CIRCLE_FACTOR = 2
DEFAULT_SAMPLES_PER_PIXEL = 2
RIESZ_WARN_SIZE = 64


OFFSET_LAYOUTS = ("uniform", "adaptive")


@dataclass(frozen=True)
class RayGeometry:
    """Parallel-beam line set covering ``[0, pi)``.

    With ``offset_layout="uniform"`` every angle uses the offsets
    ``linspace(-offset_extent, offset_extent, n_offsets)``.

    With ``offset_layout="adaptive"`` those base offsets are stretched at
    angle ``theta`` by ``sqrt(2) * max(|cos theta|, |sin theta|)``, a factor
    in ``[1, sqrt(2)]``, so diagonal angles keep the base offsets and every
    angle sees a fixed number of lines per pixel across its dominant axis.
    When the base step is ``h / (k * sqrt(2))`` for an integer ``k`` the
    bilinear weights of all lines at one angle sum to the same value over
    every pixel. The normal operator is then free of the moire pattern the
    uniform layout produces, which matters once ``|D|`` amplifies it.
    """

    n_angles: int
    n_offsets: int
    offset_extent: float
    samples_per_pixel: int = DEFAULT_SAMPLES_PER_PIXEL
    offset_layout: str = "uniform"

    def __post_init__(self):
        if self.n_angles < 1:
            raise InvalidArgument("n_angles must be positive")
        if self.n_offsets < 2:
            raise InvalidArgument("n_offsets must be at least 2")
        if not self.offset_extent > 0:
            raise InvalidArgument("offset_extent must be positive")
        if self.samples_per_pixel < 1:
            raise InvalidArgument("samples_per_pixel must be >= 1")
        if self.offset_layout not in OFFSET_LAYOUTS:
            raise InvalidArgument(f"unknown offset_layout {self.offset_layout!r}")

    @classmethod
    def for_grid(cls, grid: Grid, n_angles=180, samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL,
                 offsets_per_pixel=None, offset_layout="uniform"):
        """Geometry whose offsets reach every line meeting the interpolant's support.

        ``offsets_per_pixel`` defaults to 4 for the uniform layout and 1 for
        the adaptive one.
        """
        if offset_layout not in OFFSET_LAYOUTS:
            raise InvalidArgument(f"unknown offset_layout {offset_layout!r}")
        if offsets_per_pixel is None:
            offsets_per_pixel = 4 if offset_layout == "uniform" else 1
        if offsets_per_pixel < 1:
            raise InvalidArgument("offsets_per_pixel must be >= 1")
        h = grid.spacing
        reach = (grid.half_width + h) * math.sqrt(2.0)
        if offset_layout == "uniform":
            half_count = math.ceil(reach * offsets_per_pixel / h)
            extent = reach
        else:
            step = h / (offsets_per_pixel * math.sqrt(2.0))
            half_count = math.ceil(reach / step)
            extent = half_count * step
        return cls(n_angles, 2 * half_count + 1, extent, samples_per_pixel, offset_layout)

    @property
    def angles(self):
        return np.pi * np.arange(self.n_angles) / self.n_angles

    @property
    def angle_step(self):
        return np.pi / self.n_angles

    @property
    def offset_scale(self):
        """Per-angle stretch of the base offsets."""
        if self.offset_layout == "uniform":
            return np.ones(self.n_angles)
        th = self.angles
        return math.sqrt(2.0) * np.maximum(np.abs(np.cos(th)), np.abs(np.sin(th)))

    @property
    def base_offsets(self):
        return np.linspace(-self.offset_extent, self.offset_extent, self.n_offsets)

    @property
    def offsets(self):
        """``(n_angles, n_offsets)`` table of signed offsets."""
        return self.offset_scale[:, None] * self.base_offsets[None, :]

    @property
    def offset_steps(self):
        return self.offset_scale * (2.0 * self.offset_extent / (self.n_offsets - 1))

    @property
    def sinogram_weights(self):
        """Quadrature weight of each sinogram row, full-circle measure."""
        return HALF_CIRCLE_FACTOR * self.angle_step * self.offset_steps

    def check_grid(self, grid: Grid):
        if self.offset_extent < grid.half_width * math.sqrt(2.0) * (1 - 1e-12):
            raise InvalidArgument(
                f"offset_extent {self.offset_extent} < half_width*sqrt(2) "
                f"= {grid.half_width * math.sqrt(2.0)}")


@dataclass(frozen=True, eq=False)
class Sinogram:
    geometry: RayGeometry
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        expected = (self.geometry.n_angles, self.geometry.n_offsets)
        if arr.shape != expected:
            raise InvalidArgument(f"sinogram shape {arr.shape} != {expected}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("sinogram values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def inner(self, other) -> float:
        """Weighted inner product (full-circle measure)."""
        other = other.values if isinstance(other, Sinogram) else np.asarray(other)
        w = self.geometry.sinogram_weights[:, None]
        return float(np.sum(self.values * other * w))


@dataclass(frozen=True, eq=False)
class PixelRayField:
    """``Xf(x_i, theta_k)`` for every pixel and every angle of the full circle.

    Only the half circle is stored (``half[k, row, col]`` for
    ``k < n_angles_full // 2``); the opposite directions are equal by
    construction and :attr:`values` expands them.
    """

    grid: Grid
    n_angles_full: int
    half: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_even(self.n_angles_full)
        expected = (self.n_angles_full // 2, self.grid.n, self.grid.n)
        if self.half.shape != expected:
            raise InvalidArgument(f"field shape {self.half.shape} != {expected}")

    @property
    def values(self):
        """``(n_pixels**2, n_angles_full)`` table, row-major pixel order."""
        flat = self.half.reshape(self.half.shape[0], -1).T
        return np.concatenate([flat, flat], axis=1)

    @property
    def angle_step(self):
        return 2.0 * np.pi / self.n_angles_full


def _check_even(n_angles_full):
    if n_angles_full < 2 or n_angles_full % 2:
        raise InvalidArgument(f"n_angles_full must be even and >= 2, got {n_angles_full}")


def _as_array(image: ImageGrid):
    return np.ascontiguousarray(image.values, dtype=float)


def line_integrals(image: ImageGrid, angles, offsets,
                   samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> np.ndarray:
    """Integrate ``image`` along arbitrary lines ``{s*theta_perp + t*theta}``.

    ``offsets`` is either one row shared by all angles or a table with one
    row per angle. Returns an array of shape ``(len(angles), n_offsets)``.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    offsets = np.asarray(offsets, dtype=float)
    if offsets.ndim < 2:
        offsets = np.broadcast_to(np.atleast_1d(offsets), (len(angles), offsets.size))
    if offsets.shape[0] != len(angles):
        raise InvalidArgument(f"offsets table has {offsets.shape[0]} rows for {len(angles)} angles")
    return kernels.line_forward(_as_array(image), image.half_width,
                                np.cos(angles), np.sin(angles), offsets,
                                int(samples_per_pixel))


def xray_forward(image: ImageGrid, geometry: RayGeometry) -> Sinogram:
    geometry.check_grid(image.grid)
    values = line_integrals(image, geometry.angles, geometry.offsets,
                            geometry.samples_per_pixel)
    return Sinogram(geometry, values)


def xray_adjoint(sinogram: Sinogram, target_grid: Grid) -> ImageGrid:
    """Transpose of :func:`xray_forward` under the weighted inner products.

    ``<X f, psi>_sino == <f, X' psi>_image`` where the image weight is
    ``pixel_spacing**2`` and the sinogram weights are
    :attr:`RayGeometry.sinogram_weights`.
    """
    geo = sinogram.geometry
    geo.check_grid(target_grid)
    th = geo.angles
    weighted = sinogram.values * geo.sinogram_weights[:, None]
    raw = kernels.line_adjoint(weighted, target_grid.n, target_grid.half_width,
                               np.cos(th), np.sin(th), geo.offsets,
                               geo.samples_per_pixel)
    return ImageGrid(target_grid, raw / target_grid.spacing**2)


def normal_operator(image: ImageGrid, geometry: RayGeometry | None = None) -> ImageGrid:
    """``X'X f``, which approximates ``2 * int f(y) / |x - y| dy`` in 2D."""
    if geometry is None:
        geometry = RayGeometry.for_grid(image.grid)
    return xray_adjoint(xray_forward(image, geometry), image.grid)


def riesz_self_integral(h):
    """Integral of ``1/|y|`` over the square ``[-h/2, h/2]^2``."""
    return 4.0 * h * math.log(1.0 + math.sqrt(2.0))


def riesz_oracle(image: ImageGrid) -> ImageGrid:
    """Brute-force ``2 * sum_y f(y) / |x - y| * h^2`` over all pixel pairs.

    The coincident term uses the exact pixel integral of ``1/|y|``. Cost is
    quadratic in the number of pixels.
    """
    n = image.grid.n
    if n > RIESZ_WARN_SIZE:
        warnings.warn(f"riesz_oracle on {n}x{n} costs O(n^4)", RuntimeWarning, stacklevel=2)
    h = image.pixel_spacing
    f = image.values.ravel()
    X, Y = image.grid.coordinates()
    px, py = X.ravel(), Y.ravel()
    out = np.empty_like(f)
    chunk = max(1, 2**22 // f.size)
    for start in range(0, f.size, chunk):
        stop = min(f.size, start + chunk)
        dist = np.hypot(px[start:stop, None] - px[None, :], py[start:stop, None] - py[None, :])
        idx = np.arange(start, stop)
        dist[idx - start, idx] = np.inf
        out[start:stop] = (1.0 / dist) @ f * h**2
    out += f * riesz_self_integral(h)
    return ImageGrid(image.grid, 2.0 * out.reshape(n, n))


def _half_angles(n_angles_full):
    _check_even(n_angles_full)
    return tuple(2.0 * np.pi * np.arange(n_angles_full // 2) / n_angles_full)


def _stencils(grid: Grid, n_angles_full, samples_per_pixel):
    offsets, drow, dcol, weight = pixel_ray_stencils(
        grid.n, _half_angles(n_angles_full), int(samples_per_pixel))
    return offsets, drow, dcol, weight * grid.spacing


def pixel_ray_half(values: np.ndarray, grid: Grid, n_angles_full,
                   samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> np.ndarray:
    """Raw ``(n_angles_full//2, n, n)`` line integrals through every pixel."""
    st = _stencils(grid, n_angles_full, samples_per_pixel)
    return kernels.stencil_forward(np.ascontiguousarray(values, dtype=float), *st)


def pixel_ray_half_transpose(weights: np.ndarray, grid: Grid, n_angles_full,
                             samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> np.ndarray:
    """Plain (unweighted) transpose of :func:`pixel_ray_half`."""
    st = _stencils(grid, n_angles_full, samples_per_pixel)
    return kernels.stencil_adjoint(np.ascontiguousarray(weights, dtype=float), *st)


def pixel_ray_field(image: ImageGrid, n_angles_full: int,
                    samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> PixelRayField:
    half = pixel_ray_half(image.values, image.grid, n_angles_full, samples_per_pixel)
    return PixelRayField(image.grid, n_angles_full, half)


def pixel_ray_adjoint(weights, grid: Grid, n_angles_full: int | None = None,
                      samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> ImageGrid:
    """Transpose of :func:`pixel_ray_field` under the weighted inner products.

    ``weights`` is a :class:`PixelRayField` or an array shaped like its
    :attr:`~PixelRayField.values`. Field weight is ``angle_step * h^2``,
    image weight ``h^2``.
    """
    if isinstance(weights, PixelRayField):
        check_same_grid(weights.grid, grid)
        w = weights.values
        n_angles_full = weights.n_angles_full
    else:
        w = np.asarray(weights, dtype=float)
        if n_angles_full is None:
            n_angles_full = w.shape[1] if w.ndim == 2 else -1
    _check_even(n_angles_full)
    if w.shape != (grid.n**2, n_angles_full):
        raise InvalidArgument(f"weights shape {w.shape} != {(grid.n**2, n_angles_full)}")
    k = n_angles_full // 2
    folded = (w[:, :k] + w[:, k:]).T.reshape(k, grid.n, grid.n)
    raw = pixel_ray_half_transpose(folded, grid, n_angles_full, samples_per_pixel)
    return ImageGrid(grid, raw * (2.0 * np.pi / n_angles_full))


def pixel_ray_normal(image: ImageGrid, n_angles_full: int,
                     samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> ImageGrid:
    """``X'X f(x) = int_{S^1} Xf(x, theta) dtheta`` via the pixel-ray field."""
    half = pixel_ray_half(image.values, image.grid, n_angles_full, samples_per_pixel)
    return ImageGrid(image.grid, 2.0 * np.pi * half.mean(axis=0))
