"""The Fourier multiplier ``|D| = (-Delta)^(1/2)`` and filtered backprojection."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NumericalError
from .grid import Grid, ImageGrid
from .projector import Sinogram, xray_adjoint

IMAG_RESIDUE_TOL = 1e-10


def sphere_measure(k: int) -> float:
    """Surface measure of the unit sphere ``S^k`` in ``R^(k+1)``."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def inversion_constant(dim: int = 2) -> float:
    """``(2*pi*|S^(dim-2)|)^-1``; equals ``1/(4*pi)`` in the plane."""
    return 1.0 / (2.0 * math.pi * sphere_measure(dim - 2))


C2 = inversion_constant(2)


@dataclass(frozen=True)
class SpectralConfig:
    """Zero padding and edge treatment for the discrete multiplier.

    ``pad_factor=1`` switches padding off, which makes the operator exactly
    periodic on the grid (used to check the symbol itself).
    """

    pad_factor: int = 2
    taper: str = "cosine"

    def __post_init__(self):
        if self.pad_factor not in (1, 2, 3, 4):
            raise InvalidArgument(f"pad_factor must be 1..4, got {self.pad_factor}")
        if self.taper not in ("none", "cosine"):
            raise InvalidArgument(f"unknown taper {self.taper!r}")


def _embed(values, size, taper):
    n = values.shape[0]
    before = (size - n) // 2
    after = size - n - before
    if taper == "cosine" and size > n:
        padded = np.pad(values, ((before, after), (before, after)), mode="edge")
        ramp = np.ones(size)
        i = np.arange(size)
        left = i < before
        right = i >= before + n
        ramp[left] = np.sin(0.5 * np.pi * (i[left] + 1) / (before + 1)) ** 2
        ramp[right] = np.sin(0.5 * np.pi * (size - i[right]) / (after + 1)) ** 2
        padded *= ramp[:, None] * ramp[None, :]
    else:
        padded = np.zeros((size, size))
        padded[before:before + n, before:before + n] = values
    return padded, before


def frequency_magnitude(size: int, spacing: float) -> np.ndarray:
    xi = 2.0 * np.pi * np.fft.fftfreq(size, d=spacing)
    return np.hypot(xi[:, None], xi[None, :])


def half_laplacian(image: ImageGrid, config: SpectralConfig = SpectralConfig()) -> ImageGrid:
    n = image.grid.n
    size = config.pad_factor * n
    padded, start = _embed(image.values, size, config.taper)
    spectrum = np.fft.fft2(padded) * frequency_magnitude(size, image.pixel_spacing)
    out = np.fft.ifft2(spectrum)[start:start + n, start:start + n]
    scale = max(np.max(np.abs(out.real)), np.finfo(float).tiny)
    if np.max(np.abs(out.imag)) > IMAG_RESIDUE_TOL * scale:
        raise NumericalError("half_laplacian produced a non-negligible imaginary part")
    return ImageGrid(image.grid, out.real)


def invert_xray_normal(normal_image: ImageGrid,
                       config: SpectralConfig = SpectralConfig()) -> ImageGrid:
    """Recover ``f`` from ``X'X f`` via ``f = c_2 |D| X'X f``."""
    return half_laplacian(normal_image, config) * C2


def filtered_backprojection(sinogram: Sinogram, grid: Grid,
                            config: SpectralConfig = SpectralConfig()) -> ImageGrid:
    """Backproject, then apply ``c_2 |D|``."""
    return invert_xray_normal(xray_adjoint(sinogram, grid), config)
