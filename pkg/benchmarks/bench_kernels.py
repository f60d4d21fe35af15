"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 32 64 101] [--angles 180] [--repeat 3]

Prints one row per (kernel, size) with the best-of-``repeat`` time of each
backend, their ratio and the largest absolute difference of the outputs.
"""
import argparse
import time

import numpy as np

from spixct import _kernels_py
from spixct._stencil import pixel_ray_stencils
from spixct.grid import Grid
from spixct.projector import RayGeometry

try:
    from spixct import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(n, n_angles, rng):
    grid = Grid(n)
    image = rng.standard_normal((n, n))
    half = tuple(2 * np.pi * np.arange(n_angles) / (2 * n_angles))
    st = pixel_ray_stencils(n, half, 2)
    field = rng.standard_normal((n_angles, n, n))
    geo = RayGeometry.for_grid(grid, n_angles)
    th = geo.angles
    c, s, off = np.cos(th), np.sin(th), geo.offsets
    sino = rng.standard_normal((n_angles, geo.n_offsets))
    m = geo.samples_per_pixel
    hw = grid.half_width
    return {
        "stencil_forward": lambda k: k.stencil_forward(image, *st),
        "stencil_adjoint": lambda k: k.stencil_adjoint(field, *st),
        "line_forward": lambda k: k.line_forward(image, hw, c, s, off, m),
        "line_adjoint": lambda k: k.line_adjoint(sino, n, hw, c, s, off, m),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 101])
    parser.add_argument("--angles", type=int, default=180)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _kernels_c is None:
        print("compiled kernels not built; only the numpy fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'n':>4} {'numpy [s]':>10} {'cython [s]':>10} {'speedup':>8} {'max diff':>10}")
    for n in args.sizes:
        for name, run in cases(n, args.angles, rng).items():
            t_py, out_py = best_time(lambda: run(_kernels_py), args.repeat)
            if _kernels_c is None:
                print(f"{name:<16} {n:>4} {t_py:>10.4f} {'-':>10} {'-':>8} {'-':>10}")
                continue
            t_c, out_c = best_time(lambda: run(_kernels_c), args.repeat)
            diff = float(np.max(np.abs(out_py - out_c)))
            print(f"{name:<16} {n:>4} {t_py:>10.4f} {t_c:>10.4f} {t_py / t_c:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
