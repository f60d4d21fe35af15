"""The single-pixel transform ``Kf(x) = int_{S^1} exp(-Xf(x, theta)) dtheta``.

Angular integrals use the uniform full-circle rule with ``n_angles_full``
nodes (the periodic trapezoid rule). Only the half circle is ever computed;
the opposite direction contributes the same value, so a full-circle mean is
the half-circle mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NumericalError
from .grid import ImageGrid, ScalarField, check_same_grid
from .projector import (DEFAULT_SAMPLES_PER_PIXEL, pixel_ray_half,
                        pixel_ray_half_transpose)
from .spectral import C2, SpectralConfig, half_laplacian

DEFAULT_ANGLES_FULL = 360
MIN_ANGLES_FULL = 16
EXP_UNDERFLOW_LIMIT = -700.0
FULL_CIRCLE = 2.0 * np.pi


def _check_angles(n_angles_full):
    if int(n_angles_full) != n_angles_full or n_angles_full < MIN_ANGLES_FULL or n_angles_full % 2:
        raise InvalidArgument(
            f"n_angles_full must be an even integer >= {MIN_ANGLES_FULL}, got {n_angles_full}")
    return int(n_angles_full)


def attenuation(image: ImageGrid, n_angles_full=DEFAULT_ANGLES_FULL,
                samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> np.ndarray:
    """``exp(-Xf(x, theta))`` on the half circle, shape ``(n_angles_full//2, n, n)``.

    Raises :class:`NumericalError` when some ``Xf < -700``, where the
    exponential would overflow.
    """
    n_angles_full = _check_angles(n_angles_full)
    xf = pixel_ray_half(image.values, image.grid, n_angles_full, samples_per_pixel)
    low = float(xf.min())
    if low < EXP_UNDERFLOW_LIMIT:
        raise NumericalError(f"line integral {low:.4g} would overflow exp(-Xf)")
    return np.exp(-xf)


def single_pixel_forward(image: ImageGrid, n_angles_full=DEFAULT_ANGLES_FULL,
                         samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> ScalarField:
    """``Kf`` at every pixel center.

    Examples
    --------
    >>> from spixct.phantom import generate_disk
    >>> k = single_pixel_forward(generate_disk(32) * 0.0, 64)
    >>> bool(np.all(k.values == 2 * np.pi))
    True
    """
    e = attenuation(image, n_angles_full, samples_per_pixel)
    return ScalarField(image.grid, FULL_CIRCLE * e.mean(axis=0))


def _derivative(e, direction: ImageGrid, n_angles_full, samples_per_pixel):
    xh = pixel_ray_half(direction.values, direction.grid, n_angles_full, samples_per_pixel)
    return -FULL_CIRCLE * (e * xh).mean(axis=0)


def _adjoint(e, residual: ScalarField, n_angles_full, samples_per_pixel):
    # Transpose of h -> -(2 pi / K) sum_k e_k * A_k h with K half-circle angles.
    k = e.shape[0]
    weights = e * residual.values[None, :, :]
    raw = pixel_ray_half_transpose(weights, residual.grid, n_angles_full, samples_per_pixel)
    return -(FULL_CIRCLE / k) * raw


def frechet_derivative(base: ImageGrid, direction: ImageGrid,
                       n_angles_full=DEFAULT_ANGLES_FULL,
                       samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> ScalarField:
    """``K'[base] direction = -int exp(-X base) X direction dtheta``."""
    check_same_grid(base.grid, direction.grid)
    e = attenuation(base, n_angles_full, samples_per_pixel)
    return ScalarField(base.grid, _derivative(e, direction, n_angles_full, samples_per_pixel))


def frechet_adjoint(base: ImageGrid, residual: ScalarField,
                    n_angles_full=DEFAULT_ANGLES_FULL,
                    samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> ImageGrid:
    """Exact transpose of :func:`frechet_derivative` in ``direction``.

    Both sides use the plain pixel inner product weighted by ``h**2``.
    """
    check_same_grid(base.grid, residual.grid)
    e = attenuation(base, n_angles_full, samples_per_pixel)
    return ImageGrid(base.grid, _adjoint(e, residual, n_angles_full, samples_per_pixel))


class Linearization:
    """``K'[base]`` and its transpose with ``exp(-X base)`` computed once.

    Used by the solver, which applies both many times per outer iteration.
    """

    def __init__(self, base: ImageGrid, n_angles_full=DEFAULT_ANGLES_FULL,
                 samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL):
        self.grid = base.grid
        self.n_angles_full = _check_angles(n_angles_full)
        self.samples_per_pixel = samples_per_pixel
        self.attenuation = attenuation(base, n_angles_full, samples_per_pixel)

    @property
    def value(self) -> ScalarField:
        """``K[base]``."""
        return ScalarField(self.grid, FULL_CIRCLE * self.attenuation.mean(axis=0))

    def apply(self, direction: np.ndarray) -> np.ndarray:
        d = ImageGrid(self.grid, direction)
        return _derivative(self.attenuation, d, self.n_angles_full, self.samples_per_pixel)

    def apply_transpose(self, residual: np.ndarray) -> np.ndarray:
        r = ScalarField(self.grid, residual)
        return _adjoint(self.attenuation, r, self.n_angles_full, self.samples_per_pixel)


def linearized_reconstruction(derivative_field: ScalarField,
                              spectral_config: SpectralConfig = SpectralConfig()) -> ImageGrid:
    """``g = -c_2 |D| dK`` where ``dK`` approximates the derivative of ``K[eps g]`` at 0."""
    image = ImageGrid(derivative_field.grid, derivative_field.values)
    return half_laplacian(image, spectral_config) * (-C2)


@dataclass(frozen=True)
class EpsilonRow:
    epsilon: float
    field_l2: float
    distance_to_derivative: float
    quotient: np.ndarray = field(repr=False, compare=False)


def linearize_by_epsilon(g: ImageGrid, epsilons, n_angles_full=DEFAULT_ANGLES_FULL,
                         samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL):
    """Finite-difference fields ``(K[eps g] - 2 pi) / eps`` over a list of ``eps``.

    Parameters
    ----------
    g : ImageGrid
        Direction of the linearization.
    epsilons : sequence of float
        Nonzero, in decreasing order of magnitude.

    Returns
    -------
    field : ScalarField
        Quotient for the last (smallest) ``eps``.
    table : list of EpsilonRow
        For each ``eps``, the quotient itself, its L2 norm and its L2
        distance to the analytic derivative ``K'[0] g`` computed in the same
        discretization.
    """
    eps = [float(e) for e in epsilons]
    if not eps:
        raise InvalidArgument("epsilons must be non-empty")
    if any(e == 0 for e in eps):
        raise InvalidArgument("epsilons must be nonzero")
    if any(abs(a) < abs(b) for a, b in zip(eps, eps[1:])):
        raise InvalidArgument("epsilons must be sorted by decreasing magnitude")
    n_angles_full = _check_angles(n_angles_full)
    xg = pixel_ray_half(g.values, g.grid, n_angles_full, samples_per_pixel)
    analytic = -FULL_CIRCLE * xg.mean(axis=0)
    h2 = g.pixel_spacing**2
    table, quotient = [], None
    for e in eps:
        low = float((e * xg).min())
        if low < EXP_UNDERFLOW_LIMIT:
            raise NumericalError(f"line integral {low:.4g} would overflow exp(-Xf)")
        # expm1 keeps K[eps g] - 2 pi accurate when eps * Xg is tiny.
        quotient = FULL_CIRCLE * np.expm1(-e * xg).mean(axis=0) / e
        table.append(EpsilonRow(e, float(np.sqrt(np.sum(quotient**2) * h2)),
                                float(np.sqrt(np.sum((quotient - analytic) ** 2) * h2)),
                                quotient))
    return ScalarField(g.grid, quotient), table
