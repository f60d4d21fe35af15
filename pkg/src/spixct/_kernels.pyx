# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ray-integration kernels.

Same contracts as :mod:`spixct._kernels_py`; see that module for the
definitions. Everything here is serial with a fixed accumulation order, so
results are bit-reproducible run to run.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline Py_ssize_t _floordiv(Py_ssize_t a, Py_ssize_t b) nogil:
    cdef Py_ssize_t q = a // b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


def stencil_forward(const double[:, ::1] image, const i64[::1] offsets,
                    const i64[::1] drow, const i64[::1] dcol,
                    const double[::1] weight):
    cdef Py_ssize_t n = image.shape[0]
    cdef Py_ssize_t n_angles = offsets.shape[0] - 1
    out_arr = np.zeros((n_angles, n, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t k, r, e, c, rr, dc, c_lo, c_hi
    cdef double w
    cdef double* orow
    cdef const double* irow
    with nogil:
        for k in range(n_angles):
            for r in range(n):
                orow = &out[k, r, 0]
                for e in range(offsets[k], offsets[k + 1]):
                    rr = r + drow[e]
                    if rr < 0 or rr >= n:
                        continue
                    dc = dcol[e]
                    w = weight[e]
                    c_lo = -dc if dc < 0 else 0
                    c_hi = n - dc if dc > 0 else n
                    irow = &image[rr, 0]
                    for c in range(c_lo, c_hi):
                        orow[c] += w * irow[c + dc]
    return out_arr


def stencil_adjoint(const double[:, :, ::1] field, const i64[::1] offsets,
                    const i64[::1] drow, const i64[::1] dcol,
                    const double[::1] weight):
    cdef Py_ssize_t n_angles = field.shape[0]
    cdef Py_ssize_t n = field.shape[1]
    out_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, r, e, c, rr, dc, c_lo, c_hi
    cdef double w
    cdef double* orow
    cdef const double* frow
    with nogil:
        for k in range(n_angles):
            for r in range(n):
                orow = &out[r, 0]
                for e in range(offsets[k], offsets[k + 1]):
                    rr = r - drow[e]
                    if rr < 0 or rr >= n:
                        continue
                    dc = dcol[e]
                    w = weight[e]
                    c_lo = dc if dc > 0 else 0
                    c_hi = n + dc if dc < 0 else n
                    frow = &field[k, rr, 0]
                    for c in range(c_lo, c_hi):
                        orow[c] += w * frow[c - dc]
    return out_arr


cdef inline void _lattice_range(double v0, double b, Py_ssize_t n, Py_ssize_t m,
                                Py_ssize_t* k_lo, Py_ssize_t* k_hi) nogil:
    # Nodes sit at lattice coordinate lat = k / m along the driving axis and
    # at v = v0 - lat * b across it; keep only k whose bilinear support can
    # touch rows/columns 0..n-1, i.e. -1 < v < n.
    cdef double lo, hi
    k_lo[0] = -(m - 1)
    k_hi[0] = (n - 1) * m + (m - 1)
    if b > 0:
        lo = (v0 - n) / b
        hi = (v0 + 1.0) / b
    elif b < 0:
        lo = (v0 + 1.0) / b
        hi = (v0 - n) / b
    else:
        if v0 <= -1.0 or v0 >= n:
            k_hi[0] = k_lo[0] - 1
        return
    if <double>k_lo[0] < lo * m - 1.0:
        k_lo[0] = <Py_ssize_t>floor(lo * m) - 1
    if <double>k_hi[0] > hi * m + 1.0:
        k_hi[0] = <Py_ssize_t>floor(hi * m) + 2


cdef inline void _line_setup(double c, double s, double offset, double hw, double h,
                             Py_ssize_t m, bint* xd, double* v0, double* b,
                             double* ds) nogil:
    # x-driven: y = offset/cos + x*tan, v = row coordinate.
    # y-driven: x = y*cot - offset/sin, v = column coordinate.
    # Both reduce to v = v0 - lat * b with lat the driving lattice coordinate.
    cdef double a
    xd[0] = fabs(c) >= fabs(s)
    if xd[0]:
        b[0] = s / c
        a = offset / c
        ds[0] = h / (m * fabs(c))
    else:
        b[0] = c / s
        a = offset / s
        ds[0] = h / (m * fabs(s))
    v0[0] = (hw - a + hw * b[0]) / h


def line_forward(const double[:, ::1] image, double half_width,
                 const double[::1] cos_t, const double[::1] sin_t,
                 const double[:, :] offsets, Py_ssize_t m):
    cdef Py_ssize_t n = image.shape[0]
    cdef Py_ssize_t n_angles = cos_t.shape[0]
    cdef Py_ssize_t n_off = offsets.shape[1]
    cdef double h = 2.0 * half_width / (n - 1)
    out_arr = np.zeros((n_angles, n_off), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, kk, k_lo, k_hi, q, p0, i0, i1
    cdef double v0, b, ds, acc, v, fr, fq, w
    cdef bint xd
    with nogil:
        for i in range(n_angles):
            for j in range(n_off):
                _line_setup(cos_t[i], sin_t[i], offsets[i, j], half_width, h, m,
                            &xd, &v0, &b, &ds)
                _lattice_range(v0, b, n, m, &k_lo, &k_hi)
                acc = 0.0
                for kk in range(k_lo, k_hi + 1):
                    q = _floordiv(kk, m)
                    fq = <double>(kk - q * m) / m
                    v = v0 - (q + fq) * b
                    p0 = <Py_ssize_t>floor(v)
                    fr = v - p0
                    if p0 < -1 or p0 >= n:
                        continue
                    # (q, p0) are (column, row) when x-driven, (row, column) otherwise.
                    for i0 in range(2):
                        if q + i0 < 0 or q + i0 >= n:
                            continue
                        for i1 in range(2):
                            if p0 + i1 < 0 or p0 + i1 >= n:
                                continue
                            w = (fq if i0 else 1.0 - fq) * (fr if i1 else 1.0 - fr)
                            if xd:
                                acc += w * image[p0 + i1, q + i0]
                            else:
                                acc += w * image[q + i0, p0 + i1]
                out[i, j] = acc * ds
    return out_arr


def line_adjoint(const double[:, ::1] sino, Py_ssize_t n, double half_width,
                 const double[::1] cos_t, const double[::1] sin_t,
                 const double[:, :] offsets, Py_ssize_t m):
    cdef Py_ssize_t n_angles = cos_t.shape[0]
    cdef Py_ssize_t n_off = offsets.shape[1]
    cdef double h = 2.0 * half_width / (n - 1)
    out_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, kk, k_lo, k_hi, q, p0, i0, i1
    cdef double v0, b, ds, val, v, fr, fq, w
    cdef bint xd
    with nogil:
        for i in range(n_angles):
            for j in range(n_off):
                if sino[i, j] == 0.0:
                    continue
                _line_setup(cos_t[i], sin_t[i], offsets[i, j], half_width, h, m,
                            &xd, &v0, &b, &ds)
                val = sino[i, j] * ds
                _lattice_range(v0, b, n, m, &k_lo, &k_hi)
                for kk in range(k_lo, k_hi + 1):
                    q = _floordiv(kk, m)
                    fq = <double>(kk - q * m) / m
                    v = v0 - (q + fq) * b
                    p0 = <Py_ssize_t>floor(v)
                    fr = v - p0
                    if p0 < -1 or p0 >= n:
                        continue
                    for i0 in range(2):
                        if q + i0 < 0 or q + i0 >= n:
                            continue
                        for i1 in range(2):
                            if p0 + i1 < 0 or p0 + i1 >= n:
                                continue
                            w = ((fq if i0 else 1.0 - fq) * (fr if i1 else 1.0 - fr)) * val
                            if xd:
                                out[p0 + i1, q + i0] += w
                            else:
                                out[q + i0, p0 + i1] += w
    return out_arr
