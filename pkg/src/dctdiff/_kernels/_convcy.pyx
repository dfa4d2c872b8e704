# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled convolution kernels; same contract as the NumPy fallback."""

import numpy as np

BACKEND = "cython"


def conv1d_forward(x, w, b, int stride=1, int pad=0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, :, ::1] xv = x
    cdef double[:, :, ::1] wv = w
    cdef double[::1] bv = b
    cdef Py_ssize_t bsz = xv.shape[0], cin = xv.shape[1], length = xv.shape[2]
    cdef Py_ssize_t cout = wv.shape[0], k = wv.shape[2]
    cdef Py_ssize_t lo = (length + 2 * pad - k) // stride + 1
    y = np.empty((bsz, cout, lo), dtype=np.float64)
    cdef double[:, :, ::1] yv = y
    cdef Py_ssize_t ib, io, ii, dk, j, jlo, jhi, base
    cdef double wval
    for ib in range(bsz):
        for io in range(cout):
            for j in range(lo):
                yv[ib, io, j] = bv[io]
            for ii in range(cin):
                for dk in range(k):
                    wval = wv[io, ii, dk]
                    if wval == 0.0:
                        continue
                    base = dk - pad
                    # valid j: 0 <= j*stride + base < length
                    jlo = 0
                    if base < 0:
                        jlo = (-base + stride - 1) // stride
                    jhi = (length - 1 - base) // stride
                    if jhi >= lo:
                        jhi = lo - 1
                    for j in range(jlo, jhi + 1):
                        yv[ib, io, j] += wval * xv[ib, ii, j * stride + base]
    return y


def conv1d_backward_data(gy, w, int stride, int pad, Py_ssize_t length):
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :, ::1] gv = gy
    cdef double[:, :, ::1] wv = w
    cdef Py_ssize_t bsz = gv.shape[0], cout = gv.shape[1], lo = gv.shape[2]
    cdef Py_ssize_t cin = wv.shape[1], k = wv.shape[2]
    gx = np.zeros((bsz, cin, length), dtype=np.float64)
    cdef double[:, :, ::1] gxv = gx
    cdef Py_ssize_t ib, io, ii, dk, j, jlo, jhi, base
    cdef double wval
    for ib in range(bsz):
        for io in range(cout):
            for ii in range(cin):
                for dk in range(k):
                    wval = wv[io, ii, dk]
                    if wval == 0.0:
                        continue
                    base = dk - pad
                    jlo = 0
                    if base < 0:
                        jlo = (-base + stride - 1) // stride
                    jhi = (length - 1 - base) // stride
                    if jhi >= lo:
                        jhi = lo - 1
                    for j in range(jlo, jhi + 1):
                        gxv[ib, ii, j * stride + base] += wval * gv[ib, io, j]
    return gx


def conv1d_backward_weights(gy, x, Py_ssize_t k, int stride, int pad):
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, ::1] gv = gy
    cdef double[:, :, ::1] xv = x
    cdef Py_ssize_t bsz = gv.shape[0], cout = gv.shape[1], lo = gv.shape[2]
    cdef Py_ssize_t cin = xv.shape[1], length = xv.shape[2]
    gw = np.zeros((cout, cin, k), dtype=np.float64)
    gb = np.zeros(cout, dtype=np.float64)
    cdef double[:, :, ::1] gwv = gw
    cdef double[::1] gbv = gb
    cdef Py_ssize_t ib, io, ii, dk, j, jlo, jhi, base
    cdef double acc
    for io in range(cout):
        acc = 0.0
        for ib in range(bsz):
            for j in range(lo):
                acc += gv[ib, io, j]
        gbv[io] = acc
    for ib in range(bsz):
        for io in range(cout):
            for ii in range(cin):
                for dk in range(k):
                    base = dk - pad
                    jlo = 0
                    if base < 0:
                        jlo = (-base + stride - 1) // stride
                    jhi = (length - 1 - base) // stride
                    if jhi >= lo:
                        jhi = lo - 1
                    acc = 0.0
                    for j in range(jlo, jhi + 1):
                        acc += gv[ib, io, j] * xv[ib, ii, j * stride + base]
                    gwv[io, ii, dk] += acc
    return gw, gb


def dwconv1d_forward(x, w, b, int pad=0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, :, ::1] xv = x
    cdef double[:, ::1] wv = w
    cdef double[::1] bv = b
    cdef Py_ssize_t bsz = xv.shape[0], ch = xv.shape[1], length = xv.shape[2]
    cdef Py_ssize_t k = wv.shape[1]
    cdef Py_ssize_t lo = length + 2 * pad - k + 1
    y = np.empty((bsz, ch, lo), dtype=np.float64)
    cdef double[:, :, ::1] yv = y
    cdef Py_ssize_t ib, ic, dk, j, jlo, jhi, base
    cdef double wval
    for ib in range(bsz):
        for ic in range(ch):
            for j in range(lo):
                yv[ib, ic, j] = bv[ic]
            for dk in range(k):
                wval = wv[ic, dk]
                base = dk - pad
                jlo = 0 if base >= 0 else -base
                jhi = length - 1 - base
                if jhi >= lo:
                    jhi = lo - 1
                for j in range(jlo, jhi + 1):
                    yv[ib, ic, j] += wval * xv[ib, ic, j + base]
    return y


def dwconv1d_backward_data(gy, w, int pad, Py_ssize_t length):
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :, ::1] gv = gy
    cdef double[:, ::1] wv = w
    cdef Py_ssize_t bsz = gv.shape[0], ch = gv.shape[1], lo = gv.shape[2]
    cdef Py_ssize_t k = wv.shape[1]
    gx = np.zeros((bsz, ch, length), dtype=np.float64)
    cdef double[:, :, ::1] gxv = gx
    cdef Py_ssize_t ib, ic, dk, j, jlo, jhi, base
    cdef double wval
    for ib in range(bsz):
        for ic in range(ch):
            for dk in range(k):
                wval = wv[ic, dk]
                base = dk - pad
                jlo = 0 if base >= 0 else -base
                jhi = length - 1 - base
                if jhi >= lo:
                    jhi = lo - 1
                for j in range(jlo, jhi + 1):
                    gxv[ib, ic, j + base] += wval * gv[ib, ic, j]
    return gx


def dwconv1d_backward_weights(gy, x, Py_ssize_t k, int pad):
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, ::1] gv = gy
    cdef double[:, :, ::1] xv = x
    cdef Py_ssize_t bsz = gv.shape[0], ch = gv.shape[1], lo = gv.shape[2]
    cdef Py_ssize_t length = xv.shape[2]
    gw = np.zeros((ch, k), dtype=np.float64)
    gb = np.zeros(ch, dtype=np.float64)
    cdef double[:, ::1] gwv = gw
    cdef double[::1] gbv = gb
    cdef Py_ssize_t ib, ic, dk, j, jlo, jhi, base
    cdef double acc
    for ic in range(ch):
        acc = 0.0
        for ib in range(bsz):
            for j in range(lo):
                acc += gv[ib, ic, j]
        gbv[ic] = acc
    for ib in range(bsz):
        for ic in range(ch):
            for dk in range(k):
                base = dk - pad
                jlo = 0 if base >= 0 else -base
                jhi = length - 1 - base
                if jhi >= lo:
                    jhi = lo - 1
                acc = 0.0
                for j in range(jlo, jhi + 1):
                    acc += gv[ib, ic, j] * xv[ib, ic, j + base]
                gwv[ic, dk] += acc
    return gw, gb
