"""Pure numpy implementations of the ray-integration kernels.

Both kernel families work on an ``n x n`` image whose pixel ``(r, c)`` sits at
``x = -hw + c*h``, ``y = hw - r*h``. The image is extended by zero and
interpolated with tensor-product hat functions (bilinear interpolation).
A line is sampled at every crossing of a lattice of ``m`` nodes per pixel
along its dominant axis (columns when ``|cos| >= |sin|``, else rows) and the
samples are summed with step ``ds = h / (m * max(|cos|, |sin|))``.

``stencil_forward(image, offsets, drow, dcol, weight)``
    Angle-wise sparse correlation: ``out[k, r, c] = sum_e weight[e] *
    image[r + drow[e], c + dcol[e]]`` over entries ``e`` in
    ``offsets[k]:offsets[k+1]``, zero outside the image.
``stencil_adjoint(field, ...)``
    Exact transpose, summed over angles.
``line_forward(image, hw, cos, sin, offsets, m)``
    Integrals along the lines ``{s*(-sin, cos) + t*(cos, sin)}``; ``offsets``
    has one row of ``s`` values per angle.
``line_adjoint(sino, n, hw, cos, sin, offsets, m)``
    Exact transpose of ``line_forward``.
"""
import numpy as np


def stencil_forward(image, offsets, drow, dcol, weight):
    n = image.shape[0]
    n_angles = len(offsets) - 1
    out = np.zeros((n_angles, n, n))
    for k in range(n_angles):
        acc = out[k]
        for e in range(offsets[k], offsets[k + 1]):
            dr, dc, w = int(drow[e]), int(dcol[e]), weight[e]
            r0, r1 = max(0, -dr), min(n, n - dr)
            c0, c1 = max(0, -dc), min(n, n - dc)
            if r0 >= r1 or c0 >= c1:
                continue
            acc[r0:r1, c0:c1] += w * image[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    return out


def stencil_adjoint(field, offsets, drow, dcol, weight):
    n_angles, n, _ = field.shape
    out = np.zeros((n, n))
    for k in range(n_angles):
        src = field[k]
        for e in range(offsets[k], offsets[k + 1]):
            dr, dc, w = int(drow[e]), int(dcol[e]), weight[e]
            r0, r1 = max(0, dr), min(n, n + dr)
            c0, c1 = max(0, dc), min(n, n + dc)
            if r0 >= r1 or c0 >= c1:
                continue
            out[r0:r1, c0:c1] += w * src[r0 - dr:r1 - dr, c0 - dc:c1 - dc]
    return out


def _angle_nodes(n, hw, c, s, offsets, m):
    """Bilinear corner indices and weights for every node of every line."""
    h = 2.0 * hw / (n - 1)
    kk = np.arange(-(m - 1), (n - 1) * m + m)
    q = kk // m
    frac = (kk - q * m) / m
    lat = q + frac
    # v = v0 - lat * b is the coordinate across the driving axis.
    x_driven = abs(c) >= abs(s)
    if x_driven:
        b, a, ds = s / c, offsets[:, None] / c, h / (m * abs(c))
    else:
        b, a, ds = c / s, offsets[:, None] / s, h / (m * abs(s))
    v = (hw - a + hw * b) / h - lat * b
    p0 = np.floor(v)
    fp = v - p0
    q2 = np.broadcast_to(q, v.shape)
    f2 = np.broadcast_to(frac, v.shape)
    if x_driven:
        r0, fr, c0, fc = p0, fp, q2, f2
    else:
        r0, fr, c0, fc = q2, f2, p0, fp
    r0 = r0.astype(np.int64)
    c0 = c0.astype(np.int64)
    corners = []
    for dr, dc, w in ((0, 0, (1 - fr) * (1 - fc)), (1, 0, fr * (1 - fc)),
                      (0, 1, (1 - fr) * fc), (1, 1, fr * fc)):
        rr, cc = r0 + dr, c0 + dc
        ok = (rr >= 0) & (rr < n) & (cc >= 0) & (cc < n)
        idx = np.where(ok, rr * n + cc, 0)
        corners.append((idx, np.where(ok, w, 0.0)))
    return corners, ds


def line_forward(image, half_width, cos_t, sin_t, offsets, m):
    n = image.shape[0]
    flat = image.ravel()
    out = np.zeros((len(cos_t), offsets.shape[1]))
    for i, (c, s) in enumerate(zip(cos_t, sin_t)):
        corners, ds = _angle_nodes(n, half_width, c, s, offsets[i], m)
        acc = np.zeros(offsets.shape[1])
        for idx, w in corners:
            acc += np.sum(w * flat[idx], axis=1)
        out[i] = acc * ds
    return out


def line_adjoint(sino, n, half_width, cos_t, sin_t, offsets, m):
    out = np.zeros(n * n)
    for i, (c, s) in enumerate(zip(cos_t, sin_t)):
        corners, ds = _angle_nodes(n, half_width, c, s, offsets[i], m)
        val = sino[i][:, None] * ds
        for idx, w in corners:
            out += np.bincount(idx.ravel(), weights=(w * val).ravel(), minlength=n * n)
    return out.reshape(n, n)
