"""Hot convolution kernels with import-time backend selection.

Prefers the compiled Cython extension when it built successfully; falls
back to the NumPy implementation otherwise.  Set DCTDIFF_KERNELS=numpy or
DCTDIFF_KERNELS=cython to force a backend (the latter raises if the
extension is unavailable).
"""

import os

from . import _convpy

_FORCE = os.environ.get("DCTDIFF_KERNELS", "").lower()

if _FORCE == "numpy":
    _impl = _convpy
elif _FORCE == "cython":
    from . import _convcy as _impl  # noqa: F401  (ImportError is the error message)
else:
    try:
        from . import _convcy as _impl
    except ImportError:
        _impl = _convpy

BACKEND = _impl.BACKEND

conv1d_forward = _impl.conv1d_forward
conv1d_backward_data = _impl.conv1d_backward_data
conv1d_backward_weights = _impl.conv1d_backward_weights
dwconv1d_forward = _impl.dwconv1d_forward
dwconv1d_backward_data = _impl.dwconv1d_backward_data
dwconv1d_backward_weights = _impl.dwconv1d_backward_weights

__all__ = [
    "BACKEND",
    "conv1d_forward",
    "conv1d_backward_data",
    "conv1d_backward_weights",
    "dwconv1d_forward",
    "dwconv1d_backward_data",
    "dwconv1d_backward_weights",
]
