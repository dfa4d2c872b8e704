"""NumPy fallback convolution kernels (im2col + BLAS matmul).

Shapes follow the (batch, channels, length) convention, float64 throughout.
The compiled Cython module exposes the same six functions.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND = "numpy"


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad)))


def conv1d_forward(x, w, b, stride: int = 1, pad: int = 0):
    bsz, cin, length = x.shape
    cout, cin_w, k = w.shape
    assert cin == cin_w, "channel mismatch"
    xp = _pad(x, pad)
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]  # (B,Ci,Lo,k)
    lo = win.shape[2]
    col = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(bsz * lo, cin * k)
    y = col @ w.reshape(cout, cin * k).T
    y += b
    return np.ascontiguousarray(y.reshape(bsz, lo, cout).transpose(0, 2, 1))


def conv1d_backward_data(gy, w, stride: int, pad: int, length: int):
    bsz, cout, lo = gy.shape
    _, cin, k = w.shape
    if stride > 1:  # dilate so the stride-1 formula applies
        dil = np.zeros((bsz, cout, (lo - 1) * stride + 1))
        dil[:, :, ::stride] = gy
        gy = dil
    gyp = np.pad(gy, ((0, 0), (0, 0), (k - 1, k - 1)))
    win = sliding_window_view(gyp, k, axis=2)  # (B,Co,L+2p,k)
    lpad = win.shape[2]
    col = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(bsz * lpad, cout * k)
    wf = np.ascontiguousarray(w[:, :, ::-1].transpose(0, 2, 1)).reshape(cout * k, cin)
    gxp = (col @ wf).reshape(bsz, lpad, cin).transpose(0, 2, 1)
    return np.ascontiguousarray(gxp[:, :, pad : pad + length])


def conv1d_backward_weights(gy, x, k: int, stride: int, pad: int):
    bsz, cout, lo = gy.shape
    cin = x.shape[1]
    xp = _pad(x, pad)
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]
    col = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(bsz * lo, cin * k)
    gyc = np.ascontiguousarray(gy.transpose(1, 0, 2)).reshape(cout, bsz * lo)
    gw = (gyc @ col).reshape(cout, cin, k)
    gb = gy.sum(axis=(0, 2))
    return gw, gb


def dwconv1d_forward(x, w, b, pad: int = 0):
    k = w.shape[1]
    xp = _pad(x, pad)
    win = sliding_window_view(xp, k, axis=2)  # (B,C,Lo,k)
    y = np.einsum("bclk,ck->bcl", win, w, optimize=True)
    y += b[None, :, None]
    return y


def dwconv1d_backward_data(gy, w, pad: int, length: int):
    k = w.shape[1]
    gyp = np.pad(gy, ((0, 0), (0, 0), (k - 1, k - 1)))
    win = sliding_window_view(gyp, k, axis=2)
    gxp = np.einsum("bclk,ck->bcl", win, w[:, ::-1], optimize=True)
    return np.ascontiguousarray(gxp[:, :, pad : pad + length])


def dwconv1d_backward_weights(gy, x, k: int, pad: int):
    xp = _pad(x, pad)
    win = sliding_window_view(xp, k, axis=2)
    gw = np.einsum("bcl,bclk->ck", gy, win, optimize=True)
    gb = gy.sum(axis=(0, 2))
    return gw, gb
