"""Variance-preserving noise schedule with SNR scaling and level sampling.

Timesteps are 1-based in the public API (t in {1..T}); the internal arrays
are 0-indexed, so beta[0] holds beta_1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError

__all__ = [
    "NoiseSchedule",
    "build_quadratic",
    "snr",
    "apply_snr_scaling",
    "sample_noise_level",
    "schedule_csv",
    "DEFAULT_TIMESTEPS",
    "DEFAULT_BETA1",
    "DEFAULT_BETA_T",
    "DEFAULT_SNR_SCALE",
]

DEFAULT_TIMESTEPS = 50
DEFAULT_BETA1 = 1e-4
DEFAULT_BETA_T = 0.5
DEFAULT_SNR_SCALE = 150.0


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-timestep corruption parameters, immutable after construction.

    boundaries has T+1 entries: {1, sqrt(alpha_bar_1), ..., sqrt(alpha_bar_T)},
    strictly decreasing from 1.
    """

    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    boundaries: np.ndarray
    snr_scale_c: float = 1.0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        object.__setattr__(self, "alpha_bar", np.asarray(self.alpha_bar, dtype=np.float64))
        object.__setattr__(self, "boundaries", np.asarray(self.boundaries, dtype=np.float64))
        if beta.size < 2:
            raise DataError("schedule needs at least two timesteps")
        if not (np.all(beta > 0) and np.all(beta < 1)):
            raise DataError("every beta_t must lie in (0, 1)")
        if np.any(np.diff(self.alpha_bar) >= 0):
            raise DataError("alpha_bar must be strictly decreasing")
        if self.boundaries.size != beta.size + 1 or self.boundaries[0] != 1.0:
            raise DataError("boundaries must be {1, sqrt(alpha_bar_t)...}")
        if np.any(np.diff(self.boundaries) >= 0):
            raise DataError("boundaries must be strictly decreasing")

    @property
    def timesteps(self) -> int:
        return self.beta.size


def _from_beta(beta: np.ndarray, snr_scale_c: float) -> NoiseSchedule:
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    boundaries = np.concatenate(([1.0], np.sqrt(alpha_bar)))
    return NoiseSchedule(
        beta=beta,
        alpha=alpha,
        alpha_bar=alpha_bar,
        boundaries=boundaries,
        snr_scale_c=snr_scale_c,
    )


def build_quadratic(
    timesteps: int = DEFAULT_TIMESTEPS,
    beta1: float = DEFAULT_BETA1,
    beta_t: float = DEFAULT_BETA_T,
) -> NoiseSchedule:
    """Quadratic schedule: beta_t linear in sqrt between the endpoints."""
    if timesteps < 2:
        raise DataError("timesteps must be >= 2")
    if not (0 < beta1 <= beta_t < 1):
        raise DataError(f"need 0 < beta1 <= betaT < 1, got ({beta1}, {beta_t})")
    steps = np.arange(timesteps, dtype=np.float64)
    root = np.sqrt(beta1) + steps * (np.sqrt(beta_t) - np.sqrt(beta1)) / (timesteps - 1)
    return _from_beta(root**2, snr_scale_c=1.0)


def snr(sched: NoiseSchedule, t: int) -> float:
    """Signal-to-noise ratio alpha_bar_t / (1 - alpha_bar_t) at timestep t."""
    if not (1 <= t <= sched.timesteps):
        raise DataError(f"timestep {t} outside [1, {sched.timesteps}]")
    ab = sched.alpha_bar[t - 1]
    if ab >= 1.0:
        raise NumericalError(f"alpha_bar at t={t} is 1; SNR undefined")
    return float(ab / (1.0 - ab))


def apply_snr_scaling(sched: NoiseSchedule, c: float) -> NoiseSchedule:
    """Rebuild the schedule so its per-timestep SNR is c times the input's.

    The scaled cumulative retention is c*SNR(t) / (1 + c*SNR(t)); the new
    beta sequence is recovered iteratively via beta_t = 1 - g_t / g_{t-1}
    anchored at g_0 = 1.
    """
    if not (c > 0):
        raise DataError(f"SNR scale must be positive, got {c}")
    if sched.snr_scale_c != 1.0:
        raise DataError("schedule is already SNR-scaled")
    base_snr = sched.alpha_bar / (1.0 - sched.alpha_bar)
    gamma_bar = (c * base_snr) / (1.0 + c * base_snr)
    prev = np.concatenate(([1.0], gamma_bar[:-1]))
    beta = 1.0 - gamma_bar / prev
    if np.any(beta <= 0) or np.any(beta >= 1):
        raise NumericalError(
            f"scale c={c} incompatible with base schedule: beta left (0, 1)"
        )
    return _from_beta(beta, snr_scale_c=c)


def sample_noise_level(sched: NoiseSchedule, rng: np.random.Generator):
    """Draw a continuous noise level by stratified uniform sampling.

    Picks t uniformly from {1..T}, then draws sqrt(alpha_bar) uniformly
    from the half-open stratum (boundaries[t], boundaries[t-1]].  Returns
    (t, sqrt_alpha_bar).
    """
    t = int(rng.integers(1, sched.timesteps + 1))
    hi = sched.boundaries[t - 1]
    lo = sched.boundaries[t]
    u = rng.uniform()  # in [0, 1): value lands in (lo, hi]
    return t, float(hi - u * (hi - lo))


def schedule_csv(sched: NoiseSchedule) -> str:
    """CSV rows (t, beta_t, alpha_bar_t, snr_t) for plotting."""
    buf = io.StringIO()
    buf.write("t,beta,alpha_bar,snr\n")
    for t in range(1, sched.timesteps + 1):
        buf.write(
            f"{t},{sched.beta[t - 1]:.17g},{sched.alpha_bar[t - 1]:.17g},"
            f"{snr(sched, t):.17g}\n"
        )
    return buf.getvalue()
