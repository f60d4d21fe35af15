"""Per-angle sampling stencils for lines through pixel centers.

For a line through a pixel center the sample nodes sit at fixed offsets from
that pixel, so the bilinear weights depend on the angle only. Integrating
along the line through every pixel is then a sparse correlation of the image
with one stencil per angle. Entries are ``(drow, dcol, weight)`` with the
step length already folded into ``weight``; duplicates are merged and entries
are sorted by ``(drow, dcol)``.
"""
from functools import lru_cache

import numpy as np


def _one_angle(n, c, s, m):
    kk = np.arange(-((n - 1) * m + m - 1), (n - 1) * m + m)
    q = kk // m
    frac = (kk - q * m) / m
    lat = q + frac
    if abs(c) >= abs(s):
        ds = 1.0 / (m * abs(c))
        v = -lat * (s / c)
        r0 = np.floor(v)
        fr = v - r0
        c0, fc = q.astype(float), frac
    else:
        ds = 1.0 / (m * abs(s))
        v = -lat * (c / s)
        c0 = np.floor(v)
        fc = v - c0
        r0, fr = q.astype(float), frac
    rows, cols, wts = [], [], []
    for dr, dc, w in ((0, 0, (1 - fr) * (1 - fc)), (1, 0, fr * (1 - fc)),
                      (0, 1, (1 - fr) * fc), (1, 1, fr * fc)):
        rows.append(r0 + dr)
        cols.append(c0 + dc)
        wts.append(w)
    rows = np.concatenate(rows).astype(np.int64)
    cols = np.concatenate(cols).astype(np.int64)
    wts = np.concatenate(wts) * ds
    keep = (wts != 0) & (np.abs(rows) < n) & (np.abs(cols) < n)
    rows, cols, wts = rows[keep], cols[keep], wts[keep]
    key = (rows + n) * (2 * n + 1) + (cols + n)
    uniq, inv = np.unique(key, return_inverse=True)
    merged = np.bincount(inv, weights=wts)
    return uniq // (2 * n + 1) - n, uniq % (2 * n + 1) - n, merged


@lru_cache(maxsize=16)
def pixel_ray_stencils(n, angles, m):
    """Stencils for ``angles`` (tuple of radians) on an ``n``-pixel lattice.

    Weights are in units of the pixel spacing; multiply by ``h``.
    Returns read-only ``(offsets, drow, dcol, weight)``.
    """
    parts = [_one_angle(n, np.cos(a), np.sin(a), m) for a in angles]
    counts = [len(p[0]) for p in parts]
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    drow = np.concatenate([p[0] for p in parts]).astype(np.int64)
    dcol = np.concatenate([p[1] for p in parts]).astype(np.int64)
    weight = np.concatenate([p[2] for p in parts])
    for arr in (offsets, drow, dcol, weight):
        arr.setflags(write=False)
    return offsets, drow, dcol, weight
