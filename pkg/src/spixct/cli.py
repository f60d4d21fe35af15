"""Command-line driver: ``spixct <subcommand> [--config FILE] [--key value ...]``.

Settings come from built-in defaults, then a flat ``key=value`` config file,
then command-line flags (flags win). Every output file starts with a
comment line ``# config_hash=<sha256 prefix> seed=<seed>``; the hash covers
all resolved settings except the output directory.

Exit codes: 0 success, 1 usage error, 2 invalid input or paths,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import math
import os
import sys

import numpy as np

from . import metrics
from .errors import DivergedError, InvalidArgument, NumericalError, ParseError
from .fileio import read_image, write_image, write_pgm
from .grid import Grid, ImageGrid, ScalarField
from .phantom import generate_disk, generate_gaussian, generate_shepp_logan
from .singlepixel import (frechet_derivative, linearize_by_epsilon,
                          linearized_reconstruction, single_pixel_forward)
from .solver import SolverConfig, gauss_newton_reconstruct
from .spectral import SpectralConfig

logger = logging.getLogger("spixct")

EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC = 1, 2, 3


def _floats(text):
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _damping(text):
    return None if str(text).strip().lower() in ("auto", "none") else float(text)


# name -> (parser, default)
SETTINGS = {
    "phantom": (str, "shepplogan"),
    "n": (int, 101),
    "half_width": (float, 1.0),
    "angles": (int, 360),
    "noise": (float, 0.0),
    "noise_pixelwise": (_bool, False),
    "magnitude": (float, 1.0),
    "seed": (int, 0),
    "sigma": (float, 0.15),
    "radius": (float, 0.5),
    "samples_per_pixel": (int, 2),
    "pad_factor": (int, 2),
    "taper": (str, "cosine"),
    "derivative": (str, "finite"),
    "epsilons": (_floats, (1e-1, 1e-2, 1e-3)),
    "max_outer_iters": (int, 30),
    "cg_max_iters": (int, 60),
    "cg_tolerance": (float, 1e-3),
    "damping": (_damping, None),
    "step_control": (str, "backtracking"),
    "stop_tolerance": (float, 1e-3),
    "levels": (_floats, (0.0, 0.001, 0.005, 0.01)),
    "multipliers": (_floats, (1.0, 10.0, 20.0, 40.0)),
    "small_m": (_floats, (0.05, 0.1, 0.2)),
    "large_m": (_floats, (5.0, 10.0, 20.0)),
    "pairs": (int, 20),
    "pgm": (_bool, True),
    "out": (str, "."),
}
UNHASHED = ("out",)


class UsageError(Exception):
    pass


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InvalidArgument(f"cannot read config {path}: {exc}") from exc
    for i, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ParseError("expected key=value", i, path)
        key, value = (t.strip() for t in text.split("=", 1))
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise ParseError(f"unknown setting {key!r}", i, path)
        values[key] = value
    return values


def resolve_settings(config_path, overrides):
    raw = {}
    if config_path:
        raw.update(read_config_file(config_path))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    settings = {}
    for key, (parse, default) in SETTINGS.items():
        if key in raw:
            try:
                settings[key] = parse(raw[key])
            except ValueError as exc:
                raise InvalidArgument(f"bad value for {key}: {exc}") from exc
        else:
            settings[key] = default
    return settings


def config_hash(settings):
    canon = "\n".join(f"{k}={settings[k]!r}" for k in sorted(settings) if k not in UNHASHED)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


class Run:
    """Resolved settings plus helpers for writing tagged outputs."""

    def __init__(self, command, settings):
        self.command = command
        self.s = settings
        self.out = settings["out"]
        if not os.path.isdir(self.out):
            raise InvalidArgument(f"output directory does not exist: {self.out}")
        self.tag = f"config_hash={config_hash(settings)} seed={settings['seed']}"

    def path(self, name):
        return os.path.join(self.out, name)

    def comments(self, *extra):
        return (self.tag, f"command={self.command}") + extra

    def write_image(self, image, name):
        write_image(image, self.path(name + ".csv"), self.comments())
        if self.s["pgm"]:
            write_pgm(image, self.path(name + ".pgm"))

    def write_table(self, name, header, rows, *extra):
        with open(self.path(name), "w", encoding="ascii", newline="") as fh:
            for c in self.comments(*extra):
                fh.write(f"# {c}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                                 for v in row])

    def spectral(self):
        return SpectralConfig(self.s["pad_factor"], self.s["taper"])

    def solver_config(self, seed=None):
        s = self.s
        return SolverConfig(
            max_outer_iters=s["max_outer_iters"], cg_max_iters=s["cg_max_iters"],
            cg_tolerance=s["cg_tolerance"], damping=s["damping"],
            step_control=s["step_control"], stop_tolerance=s["stop_tolerance"],
            n_angles_full=s["angles"], samples_per_pixel=s["samples_per_pixel"],
            seed=s["seed"] if seed is None else seed)


def make_phantom(s, magnitude=None):
    name = s["phantom"]
    n, hw = s["n"], s["half_width"]
    if name == "shepplogan":
        image = generate_shepp_logan(n, hw)
    elif name == "disk":
        image = generate_disk(n, hw, s["radius"], 1.0)
    elif name == "gaussian":
        image = generate_gaussian(n, hw, s["sigma"], 1.0)
    elif name == "zero":
        image = generate_disk(n, hw, s["radius"], 0.0)
    elif name.startswith("file:"):
        image = read_image(name[5:])
        if not isinstance(image, ImageGrid):
            raise InvalidArgument(f"{name[5:]} holds a field, not an image")
    else:
        raise InvalidArgument(f"unknown phantom {name!r}")
    return image * (s["magnitude"] if magnitude is None else magnitude)


def _noisy(run, data, level, seed):
    spec = metrics.NoiseSpec(level, seed)
    return metrics.add_relative_noise(data, spec, pixelwise=run.s["noise_pixelwise"])


def cmd_forward(run):
    f = make_phantom(run.s)
    k = single_pixel_forward(f, run.s["angles"], run.s["samples_per_pixel"])
    run.write_image(f, "truth")
    run.write_image(k, "field")
    return 0


def cmd_invert_linear(run):
    s = run.s
    g = make_phantom(s)
    window = metrics.interior_window(g.grid)
    rows = []
    has_signal = bool(np.any(g.values[window]))
    if s["derivative"] == "analytic":
        field = frechet_derivative(g * 0.0, g, s["angles"], s["samples_per_pixel"])
    elif s["derivative"] == "finite":
        field, table = linearize_by_epsilon(g, s["epsilons"], s["angles"], s["samples_per_pixel"])
        for r in table:
            rec = linearized_reconstruction(ScalarField(g.grid, r.quotient), run.spectral())
            err = metrics.relative_l2_error(rec, g, window) if has_signal else math.nan
            rows.append((r.epsilon, r.field_l2, r.distance_to_derivative, err))
    else:
        raise InvalidArgument("derivative must be 'analytic' or 'finite'")
    rec = linearized_reconstruction(field, run.spectral())
    run.write_image(rec, "reconstruction")
    err = metrics.relative_l2_error(rec, g, window) if has_signal else math.nan
    run.write_table("epsilon_table.csv",
                    ["epsilon", "field_l2", "distance_to_derivative", "interior_relative_error"],
                    rows, f"final_interior_relative_error={err!r}")
    return 0


def _solve(run, truth, level, seed):
    clean = single_pixel_forward(truth, run.s["angles"], run.s["samples_per_pixel"])
    data = _noisy(run, clean, level, seed)
    try:
        image, report = gauss_newton_reconstruct(data, run.solver_config(seed), truth)
        failed = None
    except DivergedError as exc:
        image, report, failed = exc.image, exc.report, exc
    return data, image, report, failed


def cmd_reconstruct(run):
    s = run.s
    truth = make_phantom(s)
    data, image, report, failed = _solve(run, truth, s["noise"], s["seed"])
    run.write_image(data, "data")
    run.write_image(image, "reconstruction")
    report.to_csv(run.path("report.csv"), run.comments())
    report.write_timings(run.path("timings.txt"))
    final = report.final
    run.write_table("summary.csv", ["noise", "relative_error", "residual_norm", "iterations",
                                    "termination"],
                    [(s["noise"], final.relative_error, final.residual_norm,
                      final.iteration, report.termination_reason)])
    if failed is not None:
        logger.error("%s", failed)
        return EXIT_NUMERIC
    return 0


def cmd_noise_sweep(run):
    s = run.s
    truth = make_phantom(s)
    rows = []
    for i, level in enumerate(s["levels"]):
        _, _, report, _ = _solve(run, truth, level, s["seed"])
        report.to_csv(run.path(f"report_noise_{i}.csv"), run.comments(f"noise={level!r}"))
        final = report.final
        logger.info("noise %g: relative error %.4g (%s)", level, final.relative_error,
                    report.termination_reason)
        rows.append((level, final.relative_error, final.residual_norm, final.iteration,
                     report.termination_reason))
    run.write_table("noise_sweep.csv", ["noise", "relative_error", "residual_norm",
                                        "iterations", "termination"], rows)
    return 0


def cmd_magnitude_sweep(run):
    s = run.s
    curves, rows = [], []
    for m in s["multipliers"]:
        truth = make_phantom(s, magnitude=s["magnitude"] * m)
        try:
            _, _, report, _ = _solve(run, truth, s["noise"], s["seed"])
        except NumericalError as exc:
            logger.warning("multiplier %g: %s", m, exc)
            rows.append((m, math.nan, 0, "diverged"))
            continue
        for r in report.records:
            # Error divided by the multiplier, relative to the unit phantom.
            curves.append((m, r.iteration, r.relative_error))
        final = report.final
        logger.info("multiplier %g: relative error %.4g (%s)", m, final.relative_error,
                    report.termination_reason)
        rows.append((m, final.relative_error, final.iteration, report.termination_reason))
    run.write_table("magnitude_curves.csv", ["multiplier", "iteration", "normalized_error"],
                    curves)
    run.write_table("magnitude_sweep.csv", ["multiplier", "normalized_error", "iterations",
                                            "termination"], rows)
    return 0


def cmd_stability_audit(run):
    s = run.s
    grid = Grid(s["n"], s["half_width"])
    rows, summary = [], []
    for bucket, ms in (("small", s["small_m"]), ("large", s["large_m"])):
        pairs = metrics.perturbation_pairs(grid, ms, s["pairs"], s["seed"])
        pairs.append((pairs[0][0], pairs[0][0]))
        result = metrics.stability_audit(pairs, s["angles"])
        ratios = [r.lower_ratio for r in result.records if r.defined]
        for r in result.records:
            rows.append((bucket, r.M, r.l2_diff, r.h1_grad_diff, r.data_h1_diff,
                         r.lower_ratio if r.defined else "undefined"))
        summary.append((bucket, result.min_lower_ratio, float(np.median(ratios)),
                        result.fitted_exponent))
    run.write_table("audit.csv", ["bucket", "M", "l2_diff", "h1_grad_diff", "data_h1_diff",
                                  "lower_ratio"], rows)
    run.write_table("audit_summary.csv", ["bucket", "min_lower_ratio", "median_lower_ratio",
                                          "fitted_exponent"], summary)
    return 0


COMMANDS = {
    "forward": cmd_forward,
    "invert-linear": cmd_invert_linear,
    "reconstruct": cmd_reconstruct,
    "noise-sweep": cmd_noise_sweep,
    "magnitude-sweep": cmd_magnitude_sweep,
    "stability-audit": cmd_stability_audit,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="spixct", description="Single-pixel X-ray transform experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="key=value settings file")
    for key in ("phantom", "n", "angles", "noise", "magnitude", "seed", "out"):
        parser.add_argument(f"--{key}", dest=key)
    return parser


def _generic_overrides(extra):
    """Turn leftover ``--key value`` / ``--key=value`` tokens into settings."""
    out, i = {}, 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--"):
            raise UsageError(f"unexpected argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            value = extra[i + 1]
            i += 2
        else:
            raise UsageError(f"missing value for {token}")
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise UsageError(f"unknown option --{key}")
        out[key] = value
    return out


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        overrides = _generic_overrides(extra)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spixct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    overrides.update({k: getattr(args, k) for k in
                      ("phantom", "n", "angles", "noise", "magnitude", "seed", "out")
                      if getattr(args, k) is not None})
    try:
        run = Run(args.command, resolve_settings(args.config, overrides))
        return COMMANDS[args.command](run)
    except (InvalidArgument, ParseError, OSError) as exc:
        print(f"spixct: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"spixct: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
