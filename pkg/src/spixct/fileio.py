"""Plain-text image, field and sinogram files, plus 16-bit PGM previews.

Image CSV::

    # optional comment lines
    n 64 half_width 1.0
    v00,v01,...
    ...

Values are written with ``repr`` so a write/read round trip is bit-exact.
A ``# kind=field`` comment marks single-pixel data (:class:`ScalarField`).
Sinogram CSV uses the header ``n_angles <int> n_offsets <int>
offset_extent <float>`` followed by one row per angle; a
``# offset_layout=<name>`` comment records a non-default layout.
"""
from __future__ import annotations

import numpy as np

from .errors import ParseError
from .grid import Grid, ImageGrid, ScalarField
from .projector import RayGeometry, Sinogram

FIELD_TAG = "kind=field"
LAYOUT_TAG = "offset_layout="


def _format_row(row):
    return ",".join(repr(float(v)) for v in row)


def _write_lines(path, lines):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def write_image(image, path, comments=()):
    """Write an :class:`ImageGrid` or :class:`ScalarField` as CSV."""
    lines = [f"# {c}" for c in comments]
    if isinstance(image, ScalarField):
        lines.append(f"# {FIELD_TAG}")
    lines.append(f"n {image.grid.n} half_width {image.grid.half_width!r}")
    lines.extend(_format_row(row) for row in image.values)
    _write_lines(path, lines)


def _content_lines(path):
    """Split a file into comment texts and numbered non-blank content lines."""
    try:
        with open(path, encoding="ascii") as fh:
            raw = fh.read().splitlines()
    except UnicodeDecodeError as exc:
        raise ParseError("file is not ASCII text", path=path) from exc
    comments, content = [], []
    for i, line in enumerate(raw, start=1):
        text = line.strip()
        if text.startswith("#"):
            comments.append(text[1:].strip())
        elif text:
            content.append((i, text))
    return comments, content, len(raw)


def _parse_header(line_no, text, keys, types, path):
    parts = text.split()
    if len(parts) != 2 * len(keys) or parts[0::2] != list(keys):
        expected = " ".join(f"{k} <value>" for k in keys)
        raise ParseError(f"expected header '{expected}', got {text!r}", line_no, path)
    try:
        return [t(v) for t, v in zip(types, parts[1::2])]
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}", line_no, path) from exc


def _parse_rows(content, n_rows, n_cols, path, last_line):
    if len(content) != n_rows:
        line = content[n_rows][0] if len(content) > n_rows else last_line + 1
        raise ParseError(f"expected {n_rows} data rows, found {len(content)}", line, path)
    out = np.empty((n_rows, n_cols))
    for r, (line_no, text) in enumerate(content):
        cells = text.split(",")
        if len(cells) != n_cols:
            raise ParseError(f"expected {n_cols} values, found {len(cells)}", line_no, path)
        try:
            out[r] = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(str(exc), line_no, path) from exc
        if not np.all(np.isfinite(out[r])):
            raise ParseError("non-finite value", line_no, path)
    return out


def read_image(path):
    """Read an image CSV; returns a :class:`ScalarField` when tagged as one."""
    comments, content, n_lines = _content_lines(path)
    if not content:
        raise ParseError("empty file, expected header", 1, path)
    line_no, text = content[0]
    n, hw = _parse_header(line_no, text, ("n", "half_width"), (int, float), path)
    try:
        grid = Grid(n, hw)
    except ValueError as exc:
        raise ParseError(str(exc), line_no, path) from exc
    values = _parse_rows(content[1:], n, n, path, n_lines)
    cls = ScalarField if FIELD_TAG in comments else ImageGrid
    return cls(grid, values)


def write_sinogram(sinogram: Sinogram, path, comments=()):
    geo = sinogram.geometry
    lines = [f"# {c}" for c in comments]
    if geo.offset_layout != "uniform":
        lines.append(f"# {LAYOUT_TAG}{geo.offset_layout}")
    lines.append(f"# samples_per_pixel={geo.samples_per_pixel}")
    lines.append(f"n_angles {geo.n_angles} n_offsets {geo.n_offsets} "
                 f"offset_extent {geo.offset_extent!r}")
    lines.extend(_format_row(row) for row in sinogram.values)
    _write_lines(path, lines)


def read_sinogram(path) -> Sinogram:
    comments, content, n_lines = _content_lines(path)
    if not content:
        raise ParseError("empty file, expected header", 1, path)
    line_no, text = content[0]
    n_angles, n_offsets, extent = _parse_header(
        line_no, text, ("n_angles", "n_offsets", "offset_extent"), (int, int, float), path)
    layout, spp = "uniform", None
    for c in comments:
        if c.startswith(LAYOUT_TAG):
            layout = c[len(LAYOUT_TAG):]
        elif c.startswith("samples_per_pixel="):
            spp = int(c.split("=", 1)[1])
    try:
        kwargs = {} if spp is None else {"samples_per_pixel": spp}
        geo = RayGeometry(n_angles, n_offsets, extent, offset_layout=layout, **kwargs)
    except ValueError as exc:
        raise ParseError(str(exc), line_no, path) from exc
    values = _parse_rows(content[1:], n_angles, n_offsets, path, n_lines)
    return Sinogram(geo, values)


def write_pgm(image, path):
    """Binary 16-bit PGM preview, min-max normalized (lossy)."""
    v = np.asarray(image.values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    data = np.round(scaled * 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())

