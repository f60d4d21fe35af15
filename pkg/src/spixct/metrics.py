"""Discrete norms, the relative noise model and the stability audit.

Norms integrate over the whole square with the tensor trapezoid rule, so a
constant ``c`` on ``[-1, 1]^2`` has L2 norm exactly ``2 |c|``. Gradients use
central differences inside and one-sided differences on the outer ring.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .grid import ImageGrid, ScalarField, check_same_grid
from .singlepixel import DEFAULT_ANGLES_FULL, single_pixel_forward

BASELINE = 2.0 * np.pi


def _trapezoid_weights(n, h):
    w = np.full(n, h)
    w[[0, -1]] = 0.5 * h
    return np.outer(w, w)


def _values(field):
    return np.asarray(field.values, dtype=float)


def _integral_of_square(values, h):
    return float(np.sum(_trapezoid_weights(values.shape[0], h) * values * values))


def gradient_l2_norm(field) -> float:
    """``||grad v||_2`` over the square."""
    v = _values(field)
    h = field.grid.spacing
    # Axis 0 runs along -y, so its derivative is -dv/dy; the sign drops out.
    gy, gx = np.gradient(v, h)
    return math.sqrt(_integral_of_square(gx, h) + _integral_of_square(gy, h))


def l2_norm(field) -> float:
    return math.sqrt(_integral_of_square(_values(field), field.grid.spacing))


def h1_norm(field) -> float:
    return math.hypot(l2_norm(field), gradient_l2_norm(field))


def relative_l2_error(estimate, truth, window=None) -> float:
    """``||estimate - truth|| / ||truth||``, optionally on a boolean pixel window."""
    check_same_grid(estimate.grid, truth.grid)
    d = _values(estimate) - _values(truth)
    t = _values(truth)
    if window is not None:
        d, t = d[window], t[window]
    denom = np.sqrt(np.sum(t * t))
    if denom == 0:
        raise InvalidArgument("truth has zero norm")
    return float(np.sqrt(np.sum(d * d)) / denom)


def interior_window(grid, fraction=0.8):
    """Centered square covering ``fraction`` of each side."""
    margin = int(round(0.5 * (1.0 - fraction) * grid.n))
    mask = np.zeros(grid.shape, dtype=bool)
    mask[margin:grid.n - margin, margin:grid.n - margin] = True
    return mask


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian noise scaled to the signal ``data - baseline``."""

    relative_level: float
    seed: int = 0
    baseline: float = BASELINE

    def __post_init__(self):
        if not self.relative_level >= 0:
            raise InvalidArgument(f"relative_level must be >= 0, got {self.relative_level}")


def add_relative_noise(data: ScalarField, spec: NoiseSpec, pixelwise=False) -> ScalarField:
    """Add seeded i.i.d. Gaussian noise.

    The standard deviation is ``relative_level`` times the root mean square
    of ``data - baseline`` or, with ``pixelwise=True``, times
    ``|data - baseline|`` at each pixel.
    """
    if spec.relative_level == 0:
        return ScalarField(data.grid, data.values)
    signal = data.values - spec.baseline
    if pixelwise:
        sigma = spec.relative_level * np.abs(signal)
    else:
        sigma = spec.relative_level * np.sqrt(np.mean(signal * signal))
    rng = np.random.default_rng(spec.seed)
    return ScalarField(data.grid, data.values + sigma * rng.standard_normal(data.grid.shape))


@dataclass(frozen=True)
class StabilityRecord:
    M: float
    l2_diff: float
    h1_grad_diff: float
    data_h1_diff: float
    lower_ratio: float

    @property
    def defined(self) -> bool:
        return not math.isnan(self.lower_ratio)


@dataclass(frozen=True)
class AuditResult:
    records: list
    min_lower_ratio: float
    fitted_exponent: float

    def to_csv(self, path, comments=()):
        names = ["M", "l2_diff", "h1_grad_diff", "data_h1_diff", "lower_ratio"]
        with open(path, "w", encoding="ascii", newline="") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for r in self.records:
                writer.writerow([repr(float(getattr(r, k))) if r.defined or k != "lower_ratio"
                                 else "undefined" for k in names])
            fh.write(f"# min_lower_ratio={self.min_lower_ratio!r} "
                     f"fitted_exponent={self.fitted_exponent!r}\n")


def stability_record(f1: ImageGrid, f2: ImageGrid, n_angles_full=DEFAULT_ANGLES_FULL,
                     k1=None, k2=None) -> StabilityRecord:
    """Compare ``||K f1 - K f2||_H1`` with ``||f1 - f2||_L2`` for one pair."""
    check_same_grid(f1.grid, f2.grid)
    if k1 is None:
        k1 = single_pixel_forward(f1, n_angles_full)
    if k2 is None:
        k2 = single_pixel_forward(f2, n_angles_full)
    diff = ImageGrid(f1.grid, f1.values - f2.values)
    l2 = l2_norm(diff)
    data = h1_norm(ScalarField(f1.grid, k1.values - k2.values))
    m = float(max(np.abs(f1.values).max(), np.abs(f2.values).max()))
    return StabilityRecord(m, l2, gradient_l2_norm(diff), data,
                           data / l2 if l2 > 0 else math.nan)


def stability_audit(pairs, n_angles_full=DEFAULT_ANGLES_FULL) -> AuditResult:
    """Records for every pair, their smallest ratio and a log-log slope.

    ``fitted_exponent`` is the least-squares slope of ``log data_h1_diff``
    against ``log l2_diff`` over the defined records (NaN with fewer than two).
    """
    records = [stability_record(f1, f2, n_angles_full) for f1, f2 in pairs]
    good = [r for r in records if r.defined and r.data_h1_diff > 0]
    ratios = [r.lower_ratio for r in good]
    min_ratio = min(ratios) if ratios else math.nan
    if len(good) >= 2 and len({r.l2_diff for r in good}) >= 2:
        x = np.log([r.l2_diff for r in good])
        y = np.log([r.data_h1_diff for r in good])
        exponent = float(np.polyfit(x, y, 1)[0])
    else:
        exponent = math.nan
    return AuditResult(records, float(min_ratio), exponent)


def inverse_poincare_ratio(f1: ImageGrid, f2: ImageGrid) -> float:
    """``||f1 - f2||_L2 / ||grad (f1 - f2)||_L2``; ``inf`` when the gradient vanishes."""
    check_same_grid(f1.grid, f2.grid)
    diff = ImageGrid(f1.grid, f1.values - f2.values)
    g = gradient_l2_norm(diff)
    return math.inf if g == 0 else l2_norm(diff) / g


def random_bump_image(grid, max_norm, rng, n_bumps=4, width=(0.12, 0.2), reach=0.55):
    """Nonnegative sum of Gaussian bumps inside the support, scaled to ``max_norm``.

    Centers are uniform in the disk of radius ``reach * support_radius``.
    """
    X, Y = grid.coordinates()
    out = np.zeros(grid.shape)
    for _ in range(n_bumps):
        r = reach * grid.support_radius * math.sqrt(rng.random())
        phi = 2.0 * math.pi * rng.random()
        s = rng.uniform(*width)
        a = rng.uniform(0.5, 1.0)
        out += a * np.exp(-((X - r * math.cos(phi)) ** 2 + (Y - r * math.sin(phi)) ** 2)
                          / (2.0 * s * s))
    out *= grid.support_mask()
    return ImageGrid(grid, out * (max_norm / out.max()))


def perturbation_pairs(grid, max_norms, n_pairs, seed):
    """``n_pairs`` independent bump-image pairs for each max-norm, seeded."""
    rng = np.random.default_rng(seed)
    return [(random_bump_image(grid, m, rng), random_bump_image(grid, m, rng))
            for m in max_norms for _ in range(n_pairs)]
