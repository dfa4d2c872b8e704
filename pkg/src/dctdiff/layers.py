"""Building blocks of the noise predictor.

Every layer registers its parameters in a shared ParamStore under a
hierarchical name, takes and returns (batch, channels, length) tensors,
and tracks whether a feature map lives in the frequency or time domain.
The cross-domain blocks (feature extraction, fusion, detour resampling)
move between domains by zero-padding truncated coefficients to the
scale's full time length, inverse-transforming, and transforming back.
"""

from __future__ import annotations

import math

import numpy as np

from . import autodiff as ad
from .autodiff import ParamStore, Tensor

__all__ = [
    "FeatureMap",
    "sinusoidal_embedding",
    "Conv1d",
    "DwConv1d",
    "Linear",
    "GroupNorm",
    "FiLM",
    "ResidualBlock",
    "SelfAttention",
    "TimeFeatureExtract",
    "TimeFeatureFuse",
    "DetourDown",
    "DetourUp",
]

FREQ = "frequency"
TIME = "time"


class FeatureMap:
    """A (B, C, L) tensor tagged with the domain it currently lives in."""

    __slots__ = ("values", "domain")

    def __init__(self, values: Tensor, domain: str):
        if domain not in (FREQ, TIME):
            raise ValueError(f"unknown domain tag {domain!r}")
        self.values = values
        self.domain = domain

    @property
    def shape(self):
        return self.values.shape

    def require(self, domain: str) -> "FeatureMap":
        if self.domain != domain:
            raise ValueError(f"expected a {domain}-domain feature map, got {self.domain}")
        return self


def sinusoidal_embedding(levels: np.ndarray, dim: int, scale: float = 5000.0) -> np.ndarray:
    """Encode continuous noise levels as fixed sin/cos features.

    The level (in (0,1)) is multiplied by ``scale`` so nearby levels map to
    distinguishable phases, then encoded with the usual geometric
    frequency ladder.
    """
    levels = np.atleast_1d(np.asarray(levels, dtype=np.float64))
    half = dim // 2
    if half < 1:
        raise ValueError("embedding dim must be >= 2")
    exponents = np.arange(half) / max(half - 1, 1)
    freqs = np.exp(-math.log(10000.0) * exponents)
    args = levels[:, None] * scale * freqs[None, :]
    emb = np.concatenate([np.sin(args), np.cos(args)], axis=1)
    if dim % 2:
        emb = np.pad(emb, ((0, 0), (0, 1)))
    return emb


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    limit = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv1d:
    def __init__(self, store: ParamStore, name: str, cin: int, cout: int,
                 k: int, rng, stride: int = 1, zero_init: bool = False):
        self.stride = stride
        self.pad = (k - 1) // 2
        fan_in = cin * k
        if zero_init:
            w = np.zeros((cout, cin, k))
            b = np.zeros(cout)
        else:
            w = _uniform(rng, (cout, cin, k), fan_in)
            b = _uniform(rng, (cout,), fan_in)
        self.w = store.register(f"{name}.w", w)
        self.b = store.register(f"{name}.b", b)

    def __call__(self, x: Tensor) -> Tensor:
        return ad.conv1d(x, self.w, self.b, stride=self.stride, pad=self.pad)


class DwConv1d:
    def __init__(self, store: ParamStore, name: str, channels: int, k: int, rng):
        self.pad = (k - 1) // 2
        self.w = store.register(f"{name}.w", _uniform(rng, (channels, k), k))
        self.b = store.register(f"{name}.b", _uniform(rng, (channels,), k))

    def __call__(self, x: Tensor) -> Tensor:
        return ad.dwconv1d(x, self.w, self.b, pad=self.pad)


class Linear:
    def __init__(self, store: ParamStore, name: str, fin: int, fout: int, rng):
        self.w = store.register(f"{name}.w", _uniform(rng, (fout, fin), fin))
        self.b = store.register(f"{name}.b", _uniform(rng, (fout,), fin))

    def __call__(self, x: Tensor) -> Tensor:
        return ad.linear(x, self.w, self.b)


class GroupNorm:
    def __init__(self, store: ParamStore, name: str, channels: int, groups: int):
        if channels % groups:
            raise ValueError(f"channels {channels} not divisible by groups {groups}")
        self.groups = groups
        self.gamma = store.register(f"{name}.gamma", np.ones(channels))
        self.beta = store.register(f"{name}.beta", np.zeros(channels))

    def __call__(self, x: Tensor) -> Tensor:
        return ad.group_norm(x, self.gamma, self.beta, self.groups)


class FiLM:
    """Per-channel affine conditioning driven by the noise-level embedding.

    A linear map turns the embedding into a scale and a shift vector;
    the modulation is (1 + scale) * f + shift, so zero parameters give the
    identity.
    """

    def __init__(self, store: ParamStore, name: str, embed_dim: int, channels: int, rng):
        self.channels = channels
        self.proj = Linear(store, f"{name}.proj", embed_dim, 2 * channels, rng)

    def __call__(self, f: Tensor, emb: Tensor) -> Tensor:
        gb = self.proj(emb)  # (B, 2C)
        c = self.channels
        gamma = ad.reshape(ad.slice_last(gb, 0, c), (-1, c, 1))
        beta = ad.reshape(ad.slice_last(gb, c, 2 * c), (-1, c, 1))
        one = Tensor(np.ones(()))
        return ad.add(ad.mul(f, ad.add(one, gamma)), beta)


class ResidualBlock:
    """GN -> Swish -> conv -> FiLM -> GN -> Swish -> conv, plus skip."""

    def __init__(self, store: ParamStore, name: str, cin: int, cout: int,
                 groups: int, embed_dim: int, k: int, rng):
        self.gn1 = GroupNorm(store, f"{name}.gn1", cin, groups)
        self.conv1 = Conv1d(store, f"{name}.conv1", cin, cout, k, rng)
        self.film = FiLM(store, f"{name}.film", embed_dim, cout, rng)
        self.gn2 = GroupNorm(store, f"{name}.gn2", cout, groups)
        self.conv2 = Conv1d(store, f"{name}.conv2", cout, cout, k, rng)
        self.skip = None
        if cin != cout:
            self.skip = Conv1d(store, f"{name}.skip", cin, cout, 1, rng)

    def __call__(self, x: Tensor, emb: Tensor) -> Tensor:
        h = self.conv1(ad.swish(self.gn1(x)))
        h = self.film(h, emb)
        h = self.conv2(ad.swish(self.gn2(h)))
        res = self.skip(x) if self.skip is not None else x
        return ad.add(h, res)


class SelfAttention:
    """Scaled dot-product attention over sequence positions, residual."""

    def __init__(self, store: ParamStore, name: str, channels: int, heads: int, rng):
        if channels % heads:
            raise ValueError(f"channels {channels} not divisible by heads {heads}")
        self.heads = heads
        self.d = channels // heads
        self.q = Conv1d(store, f"{name}.q", channels, channels, 1, rng)
        self.k = Conv1d(store, f"{name}.k", channels, channels, 1, rng)
        self.v = Conv1d(store, f"{name}.v", channels, channels, 1, rng)
        self.out = Conv1d(store, f"{name}.out", channels, channels, 1, rng)

    def __call__(self, x: Tensor) -> Tensor:
        bsz, ch, length = x.shape
        h, d = self.heads, self.d

        def heads_first(t):
            return ad.transpose(ad.reshape(t, (bsz, h, d, length)), (0, 1, 3, 2))

        q = heads_first(self.q(x))                                   # (B,H,L,d)
        k = ad.reshape(self.k(x), (bsz, h, d, length))               # (B,H,d,L)
        v = heads_first(self.v(x))                                   # (B,H,L,d)
        scores = ad.mul(ad.matmul(q, k), Tensor(1.0 / math.sqrt(d)))
        attn = ad.softmax(scores, axis=-1)                           # (B,H,L,L)
        mixed = ad.matmul(attn, v)                                   # (B,H,L,d)
        mixed = ad.reshape(ad.transpose(mixed, (0, 1, 3, 2)), (bsz, ch, length))
        return ad.add(self.out(mixed), x)


def _to_time(f: Tensor, n_len: int) -> Tensor:
    return ad.idct_last(ad.pad_last(f, n_len))


def _to_freq(t: Tensor, k_len: int) -> Tensor:
    return ad.crop_last(ad.dct_last(t), k_len)


class TimeFeatureExtract:
    """Run a residual block on the time-domain view of a frequency map."""

    def __init__(self, store: ParamStore, name: str, channels: int, k_len: int,
                 n_len: int, groups: int, embed_dim: int, k: int, rng):
        self.k_len = k_len
        self.n_len = n_len
        self.block = ResidualBlock(store, f"{name}.block", channels, channels,
                                   groups, embed_dim, k, rng)

    def __call__(self, f: FeatureMap, emb: Tensor) -> FeatureMap:
        f.require(FREQ)
        z = _to_time(f.values, self.n_len)
        z = self.block(z, emb)
        return FeatureMap(_to_freq(z, self.k_len), FREQ)


class TimeFeatureFuse:
    """Channel-transposed attention computed on time-domain projections.

    Depthwise-separable convolutions produce query/key/value maps; their
    time-domain views are correlated channel-against-channel (a C x C
    attention map, softmax per row) and the mixed values are brought back
    to the frequency domain and added residually.
    """

    def __init__(self, store: ParamStore, name: str, channels: int, k_len: int,
                 n_len: int, k: int, rng):
        self.channels = channels
        self.k_len = k_len
        self.n_len = n_len
        for tag in ("q", "k", "v"):
            setattr(self, f"pw_{tag}", Conv1d(store, f"{name}.pw_{tag}", channels, channels, 1, rng))
            setattr(self, f"dw_{tag}", DwConv1d(store, f"{name}.dw_{tag}", channels, k, rng))

    def _project(self, f: Tensor, tag: str) -> Tensor:
        z = getattr(self, f"dw_{tag}")(getattr(self, f"pw_{tag}")(f))
        return _to_time(z, self.n_len)

    def __call__(self, f: FeatureMap) -> FeatureMap:
        f.require(FREQ)
        tq = self._project(f.values, "q")                      # (B,C,N)
        tk = self._project(f.values, "k")
        tv = self._project(f.values, "v")
        scores = ad.matmul(tq, ad.transpose(tk, (0, 2, 1)))    # (B,C,C)
        scores = ad.mul(scores, Tensor(1.0 / math.sqrt(self.channels)))
        attn = ad.softmax(scores, axis=-1)
        fused = ad.matmul(attn, tv)                            # (B,C,N)
        back = _to_freq(fused, self.k_len)
        return FeatureMap(ad.add(f.values, back), FREQ)


class DetourDown:
    """Halve a frequency map's scale by resampling through the time domain.

    Direct decimation of coefficients aliases; the detour converts to the
    time domain, applies a strided convolution, and re-transforms, so
    content above the child scale's band is cut by the final truncation.
    """

    def __init__(self, store: ParamStore, name: str, cin: int, cout: int,
                 k_len: int, n_len: int, k: int, rng):
        if k_len % 2 or n_len % 2:
            raise ValueError(f"detour down needs even lengths, got ({k_len}, {n_len})")
        self.k_len = k_len
        self.n_len = n_len
        self.conv = Conv1d(store, f"{name}.conv", cin, cout, k, rng, stride=2)

    def __call__(self, f: FeatureMap, emb: Tensor = None) -> FeatureMap:
        f.require(FREQ)
        z = _to_time(f.values, self.n_len)
        z = self.conv(z)
        return FeatureMap(_to_freq(z, self.k_len // 2), FREQ)


class DetourUp:
    """Double a frequency map's scale via the time-domain detour.

    Linear midpoint interpolation followed by a smoothing convolution,
    then back to coefficients at the parent scale's length.
    """

    def __init__(self, store: ParamStore, name: str, cin: int, cout: int,
                 k_len: int, n_len: int, k: int, rng):
        self.k_len = k_len
        self.n_len = n_len
        self.conv = Conv1d(store, f"{name}.conv", cin, cout, k, rng)

    def __call__(self, f: FeatureMap, emb: Tensor = None) -> FeatureMap:
        f.require(FREQ)
        z = _to_time(f.values, self.n_len)
        z = self.conv(ad.upsample_linear2(z))
        return FeatureMap(_to_freq(z, self.k_len * 2), FREQ)
