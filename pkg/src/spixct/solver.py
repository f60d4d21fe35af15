"""Gauss-Newton reconstruction from single-pixel data.

Minimizes ``phi(f) = 1/2 ||K f - data||^2`` (pixel inner product weighted by
``h**2``) over images supported in the support disk. Each outer iteration
solves the damped normal equations

    (J^T J + lambda I) delta = -J^T (K f - data),   J = K'[f],

by matrix-free conjugate gradients on the support pixels, then takes a step
``f + alpha * delta`` with Armijo backtracking on ``phi``.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import DivergedError, InvalidArgument, NumericalError
from .grid import ImageGrid, ScalarField, check_same_grid
from .projector import DEFAULT_SAMPLES_PER_PIXEL
from .singlepixel import DEFAULT_ANGLES_FULL, Linearization, single_pixel_forward

ARMIJO_SLOPE = 1e-4
# Residuals below this multiple of eps * ||data|| are round-off.
ROUNDOFF_FLOOR = 1e3 * np.finfo(float).eps
STEP_CONTROLS = ("none", "backtracking")
TERMINATIONS = ("converged", "stagnated", "max_iters", "diverged")


@dataclass(frozen=True)
class SolverConfig:
    """Gauss-Newton settings.

    ``damping=None`` picks ``damping_scale * trace(J^T J) / n_unknowns`` at
    every outer iteration, with the trace from a Hutchinson estimate using
    ``trace_probes`` Rademacher vectors drawn from ``seed``.

    The solve stops as ``converged`` once an accepted step lowers the
    residual norm by less than ``stop_tolerance`` (relative), or when the
    residual is at round-off level (``ROUNDOFF_FLOOR * ||data||``). It stops as ``stagnated`` when backtracking
    finds no decrease within ``max_halvings`` halvings.
    """

    max_outer_iters: int = 30
    cg_max_iters: int = 60
    cg_tolerance: float = 1e-3
    damping: float | None = None
    damping_scale: float = 1e-6
    step_control: str = "backtracking"
    shrink: float = 0.5
    max_halvings: int = 10
    stop_tolerance: float = 1e-3
    regularization: float = 0.0
    n_angles_full: int = DEFAULT_ANGLES_FULL
    samples_per_pixel: int = DEFAULT_SAMPLES_PER_PIXEL
    trace_probes: int = 4
    seed: int = 0
    initial_guess: ImageGrid | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.max_outer_iters < 1 or self.cg_max_iters < 1:
            raise InvalidArgument("iteration limits must be >= 1")
        for name in ("cg_tolerance", "stop_tolerance", "shrink"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise InvalidArgument(f"{name} must lie in (0, 1), got {value}")
        if self.damping is not None and self.damping < 0:
            raise InvalidArgument("damping must be nonnegative")
        if self.damping_scale < 0 or self.regularization < 0:
            raise InvalidArgument("damping_scale and regularization must be nonnegative")
        if self.step_control not in STEP_CONTROLS:
            raise InvalidArgument(f"step_control must be one of {STEP_CONTROLS}")
        if self.max_halvings < 0 or self.trace_probes < 1:
            raise InvalidArgument("max_halvings must be >= 0 and trace_probes >= 1")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    residual_norm: float
    error_norm: float
    relative_error: float
    step_norm: float
    step_size: float
    damping: float
    cg_iterations: int
    wall_time: float


CSV_COLUMNS = [f.name for f in fields(IterationRecord) if f.name != "wall_time"]


@dataclass
class SolveReport:
    """Per-iteration log; row 0 describes the initial guess."""

    records: list = field(default_factory=list)
    termination_reason: str = ""

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def residual_norms(self):
        return np.array([r.residual_norm for r in self.records])

    @property
    def relative_errors(self):
        return np.array([r.relative_error for r in self.records])

    def to_csv(self, path, comments=()):
        """Write every column except wall time, so reruns are byte-identical."""
        with open(path, "w", encoding="ascii", newline="") as fh:
            for c in comments:
                fh.write(f"# {c}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in self.records:
                writer.writerow([_fmt(getattr(r, name)) for name in CSV_COLUMNS])
            fh.write(f"# termination={self.termination_reason}\n")

    def write_timings(self, path):
        """Wall times, one per line; not part of the reproducible outputs."""
        with open(path, "w", encoding="ascii") as fh:
            for r in self.records:
                fh.write(f"{r.iteration} {r.wall_time:.6f}\n")


def _fmt(value):
    return repr(float(value)) if isinstance(value, float) else str(value)


def _weighted_norm(values, h):
    return float(np.sqrt(np.sum(values * values)) * h)


def residual(f: ImageGrid, data: ScalarField, n_angles_full=DEFAULT_ANGLES_FULL,
             samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL):
    """``K f - data`` and its ``h``-weighted L2 norm."""
    check_same_grid(f.grid, data.grid)
    r = single_pixel_forward(f, n_angles_full, samples_per_pixel).values - data.values
    return ScalarField(f.grid, r), _weighted_norm(r, f.pixel_spacing)


def objective(f: ImageGrid, data: ScalarField, n_angles_full=DEFAULT_ANGLES_FULL,
              samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> float:
    """``1/2 ||K f - data||^2``."""
    return 0.5 * residual(f, data, n_angles_full, samples_per_pixel)[1] ** 2


def gradient(f: ImageGrid, data: ScalarField, n_angles_full=DEFAULT_ANGLES_FULL,
             samples_per_pixel=DEFAULT_SAMPLES_PER_PIXEL) -> ImageGrid:
    """``J^T (K f - data)``, the gradient of :func:`objective`."""
    check_same_grid(f.grid, data.grid)
    lin = Linearization(f, n_angles_full, samples_per_pixel)
    return ImageGrid(f.grid, lin.apply_transpose(lin.value.values - data.values))


class _Problem:
    """Residual bookkeeping restricted to the support pixels."""

    def __init__(self, data, config, truth):
        self.grid = data.grid
        self.data = data.values
        self.config = config
        self.h = self.grid.spacing
        self.mask = self.grid.support_mask()
        self.truth = None if truth is None else truth.values
        self.truth_norm = None if truth is None else _weighted_norm(truth.values, self.h)

    def embed(self, x):
        out = np.zeros(self.grid.shape)
        out[self.mask] = x
        return out

    def linearize(self, f):
        return Linearization(ImageGrid(self.grid, f), self.config.n_angles_full,
                             self.config.samples_per_pixel)

    def misfit(self, f):
        """Residual norm at ``f``; ``inf`` when ``K f`` cannot be evaluated."""
        try:
            k = single_pixel_forward(ImageGrid(self.grid, f), self.config.n_angles_full,
                                     self.config.samples_per_pixel).values
        except NumericalError:
            return math.inf
        r = k - self.data
        if not np.all(np.isfinite(r)):
            return math.inf
        with np.errstate(over="ignore"):
            return _weighted_norm(r, self.h)

    def objective(self, f, misfit):
        return 0.5 * misfit**2 + 0.5 * self.config.regularization * _weighted_norm(f, self.h) ** 2

    def errors(self, f):
        if self.truth is None:
            return math.nan, math.nan
        err = _weighted_norm(f - self.truth, self.h)
        return err, err / self.truth_norm if self.truth_norm > 0 else math.nan


def _trace_estimate(lin, prob, rng):
    total = 0.0
    for _ in range(prob.config.trace_probes):
        z = rng.choice((-1.0, 1.0), size=int(prob.mask.sum()))
        jz = lin.apply(prob.embed(z))
        total += float(np.sum(jz * jz))
    return total / prob.config.trace_probes


def _gauss_newton_step(lin, r, f, prob, damping):
    h2 = prob.h**2
    mu = prob.config.regularization
    shift = damping + mu

    # Operators act on coefficient vectors; the h^2 weights cancel in the
    # normal equations, so the plain transpose pairs with the plain apply.
    def normal(x):
        jx = lin.apply(prob.embed(x))
        return lin.apply_transpose(jx)[prob.mask] + shift * x

    n_unknowns = int(prob.mask.sum())
    op = LinearOperator((n_unknowns, n_unknowns), matvec=normal, dtype=float)
    rhs = -lin.apply_transpose(r)[prob.mask] - mu * f[prob.mask]
    count = [0]

    def tick(_):
        count[0] += 1

    delta, _ = cg(op, rhs, rtol=prob.config.cg_tolerance, atol=0.0,
                  maxiter=prob.config.cg_max_iters, callback=tick)
    slope = -float(np.dot(rhs, delta)) * h2
    return prob.embed(delta), count[0], slope


def gauss_newton_reconstruct(data: ScalarField, config: SolverConfig = SolverConfig(),
                             truth: ImageGrid | None = None):
    """Reconstruct ``f`` from ``data ~ K f``.

    Parameters
    ----------
    data : ScalarField
        Measured single-pixel data.
    config : SolverConfig
    truth : ImageGrid, optional
        When given, each record carries the reconstruction error.

    Returns
    -------
    image : ImageGrid
    report : SolveReport

    Raises
    ------
    DivergedError
        If the residual becomes non-finite; ``report`` and ``image`` hold
        the last state.
    """
    if truth is not None:
        check_same_grid(data.grid, truth.grid)
    prob = _Problem(data, config, truth)
    if config.initial_guess is not None:
        check_same_grid(data.grid, config.initial_guess.grid)
        f = np.where(prob.mask, config.initial_guess.values, 0.0)
    else:
        f = np.zeros(prob.grid.shape)
    rng = np.random.default_rng(config.seed)
    report = SolveReport()
    start = time.perf_counter()

    def record(it, misfit, step_norm, alpha, lam, n_cg):
        err, rel = prob.errors(f)
        report.records.append(IterationRecord(
            it, float(misfit), float(err), float(rel), float(step_norm), float(alpha),
            float(lam), int(n_cg), time.perf_counter() - start))

    def fail(message):
        report.termination_reason = "diverged"
        raise DivergedError(message, report, ImageGrid(prob.grid, f))

    try:
        lin = prob.linearize(f)
    except NumericalError as exc:
        record(0, math.inf, 0.0, 0.0, 0.0, 0)
        fail(f"initial guess cannot be evaluated: {exc}")
    r = lin.value.values - prob.data
    misfit = _weighted_norm(r, prob.h)
    if not math.isfinite(misfit):
        record(0, math.inf, 0.0, 0.0, 0.0, 0)
        fail("initial residual is not finite")
    record(0, misfit, 0.0, 0.0, 0.0, 0)
    floor = ROUNDOFF_FLOOR * _weighted_norm(prob.data, prob.h)
    if misfit <= floor:
        report.termination_reason = "converged"
        return ImageGrid(prob.grid, f), report

    for it in range(1, config.max_outer_iters + 1):
        if config.damping is None:
            lam = config.damping_scale * _trace_estimate(lin, prob, rng) / prob.mask.sum()
        else:
            lam = config.damping
        delta, n_cg, slope = _gauss_newton_step(lin, r, f, prob, lam)
        phi0 = prob.objective(f, misfit)
        alpha, accepted = 1.0, False
        halvings = config.max_halvings if config.step_control == "backtracking" else 0
        for _ in range(halvings + 1):
            trial = f + alpha * delta
            trial_misfit = prob.misfit(trial)
            if config.step_control == "none":
                accepted = True
                break
            if trial_misfit < math.inf and \
                    prob.objective(trial, trial_misfit) <= phi0 + ARMIJO_SLOPE * alpha * slope:
                accepted = True
                break
            alpha *= config.shrink
        if not accepted:
            record(it, misfit, 0.0, 0.0, lam, n_cg)
            report.termination_reason = "stagnated"
            return ImageGrid(prob.grid, f), report
        if not math.isfinite(trial_misfit):
            f = trial
            record(it, math.inf, alpha * _weighted_norm(delta, prob.h), alpha, lam, n_cg)
            fail(f"residual became non-finite at iteration {it}")
        previous = misfit
        f, misfit = trial, trial_misfit
        record(it, misfit, alpha * _weighted_norm(delta, prob.h), alpha, lam, n_cg)
        if misfit <= floor or 0.0 <= previous - misfit < config.stop_tolerance * previous:
            report.termination_reason = "converged"
            return ImageGrid(prob.grid, f), report
        lin = prob.linearize(f)
        r = lin.value.values - prob.data
    report.termination_reason = "max_iters"
    return ImageGrid(prob.grid, f), report
