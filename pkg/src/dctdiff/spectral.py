"""Orthonormal DCT transforms, spectrum truncation and coefficient scaling.

All arithmetic is double precision.  The matrix-based transforms
(`dct_direct` / `idct_direct`) are the reference kernels used as test
oracles; the module-level transforms delegate to scipy's FFT-backed path,
which agrees with the reference to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import DataError

__all__ = [
    "TimeSignal",
    "Spectrum",
    "ScalingBound",
    "dct_direct",
    "idct_direct",
    "dct_ortho",
    "idct_ortho",
    "truncation_index",
    "to_spectrum",
    "from_spectrum",
    "estimate_eta",
    "scale",
    "unscale",
    "DEFAULT_ETA",
    "DEFAULT_TAU",
]

# Fallback scaling bound when no corpus is available to estimate one.
DEFAULT_ETA = 3.0
DEFAULT_TAU = 1.75


@dataclass(frozen=True)
class TimeSignal:
    """A sampled single-channel waveform (amplitudes in au)."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 1:
            raise DataError("signal must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise DataError("signal contains non-finite samples")
        if not (self.fs > 0):
            raise DataError(f"sampling rate must be positive, got {self.fs}")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


@dataclass(frozen=True)
class Spectrum:
    """Truncated orthonormal DCT-II coefficients of a TimeSignal.

    ``coeffs[0]`` is the DC component, the rest are AC components.
    ``scaled`` records whether the coefficients have been divided by a
    scaling bound eta.
    """

    coeffs: np.ndarray
    original_length: int
    fs: float
    scaled: bool = False

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise DataError("spectrum must be a non-empty 1-D array")
        if not np.all(np.isfinite(coeffs)):
            raise DataError("spectrum contains non-finite coefficients")
        if not (1 <= coeffs.size <= self.original_length):
            raise DataError(
                f"invalid truncation: K={coeffs.size}, N={self.original_length}"
            )
        if not (self.fs > 0):
            raise DataError(f"sampling rate must be positive, got {self.fs}")

    @property
    def truncation_length(self) -> int:
        return self.coeffs.size

    @property
    def dc(self) -> float:
        return float(self.coeffs[0])


@dataclass(frozen=True)
class ScalingBound:
    """Global coefficient scaling bound estimated from DC components."""

    eta: float
    tau: float = DEFAULT_TAU
    sample_count: int = 0

    def __post_init__(self):
        if not (self.eta > 0) or not math.isfinite(self.eta):
            raise DataError(f"eta must be a positive finite value, got {self.eta}")


def _basis_matrix(n: int) -> np.ndarray:
    # rows: coefficient index k, columns: sample index m
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * m + 1) * k / (2 * n))
    c = np.full(n, math.sqrt(2.0 / n))
    c[0] = math.sqrt(1.0 / n)
    return c[:, None] * mat


def dct_direct(x: np.ndarray) -> np.ndarray:
    """O(N^2) orthonormal forward transform (reference kernel)."""
    x = np.asarray(x, dtype=np.float64)
    return _basis_matrix(x.shape[-1]) @ x


def idct_direct(d: np.ndarray) -> np.ndarray:
    """O(N^2) orthonormal inverse transform (reference kernel)."""
    d = np.asarray(d, dtype=np.float64)
    return _basis_matrix(d.shape[-1]).T @ d


def dct_ortho(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Orthonormal forward transform (fast path)."""
    return scipy.fft.dct(np.asarray(x, dtype=np.float64), type=2, norm="ortho", axis=axis)


def idct_ortho(d: np.ndarray, axis: int = -1) -> np.ndarray:
    """Orthonormal inverse transform (fast path)."""
    return scipy.fft.idct(np.asarray(d, dtype=np.float64), type=2, norm="ortho", axis=axis)


def truncation_index(fs: float, n: int, f_cut: float) -> int:
    """Number of leading coefficients covering frequencies up to f_cut.

    The k-th coefficient of an N-point transform corresponds to frequency
    k * fs / (2N), so the count is floor(f_cut * 2n / fs).
    """
    if fs <= 0 or n < 1 or f_cut <= 0:
        raise DataError("fs, n and f_cut must be positive")
    if f_cut > fs / 2:
        raise DataError(f"f_cut={f_cut} exceeds Nyquist {fs / 2}")
    k = int(math.floor((2.0 * n * f_cut) / fs))
    if k < 1:
        raise DataError(f"f_cut={f_cut} below the frequency resolution {fs / (2 * n)}")
    return min(k, n)


def to_spectrum(signal: TimeSignal, k: int) -> Spectrum:
    """Forward transform and keep the first k coefficients."""
    n = len(signal)
    if not (1 <= k <= n):
        raise DataError(f"truncation length {k} outside [1, {n}]")
    coeffs = dct_ortho(signal.samples)[:k]
    return Spectrum(coeffs=coeffs, original_length=n, fs=signal.fs, scaled=False)


def from_spectrum(spec: Spectrum) -> TimeSignal:
    """Zero-pad to the original length and inverse-transform.

    Rejects scaled spectra: forgetting to unscale first is a pipeline-order
    bug this check is meant to catch.
    """
    if spec.scaled:
        raise DataError("spectrum is still scaled; unscale before inverting")
    padded = np.zeros(spec.original_length)
    padded[: spec.coeffs.size] = spec.coeffs
    return TimeSignal(samples=idct_ortho(padded), fs=spec.fs)


def estimate_eta(
    spectra,
    tau: float = DEFAULT_TAU,
    method: str = "linear",
) -> ScalingBound:
    """Estimate the scaling bound from the DC components of a corpus.

    eta = max(|P_tau|, |P_(100-tau)|) over the DC values.  ``method``
    selects the percentile rule: "linear" interpolates between closest
    ranks (the fixed default, deterministic), "outer" rounds each
    percentile outward to the nearest data point, which can only enlarge
    the bound.
    """
    if not (0 < tau < 50):
        raise DataError(f"tau must lie in (0, 50), got {tau}")
    dc = np.array([s.dc for s in spectra], dtype=np.float64)
    if dc.size == 0:
        raise DataError("cannot estimate a bound from an empty collection")
    if method == "linear":
        lo, hi = np.percentile(dc, [tau, 100.0 - tau])
    elif method == "outer":
        lo = np.percentile(dc, tau, method="lower")
        hi = np.percentile(dc, 100.0 - tau, method="higher")
    else:
        raise DataError(f"unknown percentile method {method!r}")
    eta = max(abs(float(lo)), abs(float(hi)))
    if eta == 0.0:
        raise DataError("degenerate corpus: all DC components are zero")
    return ScalingBound(eta=eta, tau=tau, sample_count=dc.size)


def scale(spec: Spectrum, bound: ScalingBound) -> Spectrum:
    """Divide all coefficients by eta and mark the spectrum as scaled."""
    if spec.scaled:
        raise DataError("spectrum already scaled")
    return Spectrum(
        coeffs=spec.coeffs / bound.eta,
        original_length=spec.original_length,
        fs=spec.fs,
        scaled=True,
    )


def unscale(spec: Spectrum, bound: ScalingBound) -> Spectrum:
    """Multiply all coefficients by eta and clear the scaled flag."""
    if not spec.scaled:
        raise DataError("spectrum is not scaled")
    return Spectrum(
        coeffs=spec.coeffs * bound.eta,
        original_length=spec.original_length,
        fs=spec.fs,
        scaled=False,
    )
