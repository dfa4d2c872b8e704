"""The noise predictor: a 1D U-Net over truncated coefficients.

The network consumes the latent coefficients concatenated channel-wise
with the noisy-observation coefficients, conditioned on the continuous
noise level through FiLM.  Encoder stages interleave frequency-domain
residual blocks with time-domain extraction blocks; channel fusion runs
at the middle encoder stage, self-attention at the bottleneck and the
middle decoder stage, and all resampling detours through the time domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import ParamStore, Tensor
from .errors import DataError
from .layers import (
    FREQ,
    Conv1d,
    DetourDown,
    DetourUp,
    FeatureMap,
    GroupNorm,
    Linear,
    ResidualBlock,
    SelfAttention,
    TimeFeatureExtract,
    TimeFeatureFuse,
    sinusoidal_embedding,
)

__all__ = ["PredictorConfig", "NoisePredictor"]


@dataclass(frozen=True)
class PredictorConfig:
    input_length: int
    full_length: int
    levels: int = 3
    base_channels: int = 16
    channel_multipliers: tuple = (1, 2, 2)
    groups: int = 4
    attention_heads: int = 1
    embed_dim: int = 64
    kernel_size: int = 3
    level_scale: float = 5000.0

    def __post_init__(self):
        object.__setattr__(self, "channel_multipliers", tuple(self.channel_multipliers))
        if len(self.channel_multipliers) != self.levels:
            raise DataError("need one channel multiplier per level")
        div = 1 << self.levels
        if self.input_length % div or self.full_length % div:
            raise DataError(
                f"input/full lengths ({self.input_length}, {self.full_length}) "
                f"must be divisible by 2^levels = {div}"
            )
        if self.input_length > self.full_length:
            raise DataError("truncated length cannot exceed the full length")
        for mult in self.channel_multipliers:
            if (self.base_channels * mult) % self.groups:
                raise DataError("every channel count must be divisible by groups")
        if self.embed_dim < 2:
            raise DataError("embed_dim must be >= 2")

    @property
    def channels(self) -> tuple:
        return tuple(self.base_channels * m for m in self.channel_multipliers)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PredictorConfig":
        return cls(**{k: (tuple(v) if k == "channel_multipliers" else v) for k, v in d.items()})


class NoisePredictor:
    """U-Net noise estimate for (latent, level, condition) triples."""

    def __init__(self, config: PredictorConfig, rng: np.random.Generator):
        self.config = config
        self.params = ParamStore()
        p = self.params
        cfg = config
        chans = cfg.channels
        k = cfg.kernel_size
        mid = cfg.levels // 2
        self.mid = mid

        k_lens = [cfg.input_length >> s for s in range(cfg.levels + 1)]
        n_lens = [cfg.full_length >> s for s in range(cfg.levels + 1)]
        self.k_lens, self.n_lens = k_lens, n_lens

        self.conv_in = Conv1d(p, "in", 2, chans[0], k, rng)
        self.emb_stem = Linear(p, "emb.stem", cfg.embed_dim, cfg.embed_dim, rng)

        self.enc_res, self.enc_tfe, self.enc_down = [], [], []
        for lvl in range(cfg.levels):
            cin = chans[lvl]
            cnext = chans[lvl + 1] if lvl + 1 < cfg.levels else chans[-1]
            self.enc_res.append(ResidualBlock(
                p, f"enc{lvl}.res", cin, cin, cfg.groups, cfg.embed_dim, k, rng))
            self.enc_tfe.append(TimeFeatureExtract(
                p, f"enc{lvl}.tfe", cin, k_lens[lvl], n_lens[lvl],
                cfg.groups, cfg.embed_dim, k, rng))
            self.enc_down.append(DetourDown(
                p, f"enc{lvl}.down", cin, cnext, k_lens[lvl], n_lens[lvl], k, rng))
        self.enc_tff = TimeFeatureFuse(
            p, f"enc{mid}.tff", chans[mid], k_lens[mid], n_lens[mid], k, rng)

        cb = chans[-1]
        self.mid_res1 = ResidualBlock(p, "mid.res1", cb, cb, cfg.groups, cfg.embed_dim, k, rng)
        self.mid_attn = SelfAttention(p, "mid.attn", cb, cfg.attention_heads, rng)
        self.mid_res2 = ResidualBlock(p, "mid.res2", cb, cb, cfg.groups, cfg.embed_dim, k, rng)

        self.dec_up, self.dec_res = [], []
        for lvl in reversed(range(cfg.levels)):
            cbelow = chans[lvl + 1] if lvl + 1 < cfg.levels else chans[-1]
            self.dec_up.append(DetourUp(
                p, f"dec{lvl}.up", cbelow, chans[lvl],
                k_lens[lvl + 1], n_lens[lvl + 1], k, rng))
            self.dec_res.append(ResidualBlock(
                p, f"dec{lvl}.res", 2 * chans[lvl], chans[lvl],
                cfg.groups, cfg.embed_dim, k, rng))
        self.dec_attn = SelfAttention(p, "dec.attn", chans[mid], cfg.attention_heads, rng)

        self.head_gn = GroupNorm(p, "head.gn", chans[0], cfg.groups)
        self.head_conv = Conv1d(p, "head.conv", chans[0], 1, k, rng, zero_init=True)

    # ------------------------------------------------------------- forward

    def _embed(self, level) -> Tensor:
        emb = sinusoidal_embedding(level, self.config.embed_dim, self.config.level_scale)
        return ad.swish(self.emb_stem(Tensor(emb)))

    def forward(self, x_t, level, cond) -> Tensor:
        """Noise estimate; accepts (K,) or (B, K) arrays, returns a Tensor."""
        x_t = np.atleast_2d(np.asarray(x_t, dtype=np.float64))
        cond = np.atleast_2d(np.asarray(cond, dtype=np.float64))
        if x_t.shape != cond.shape:
            raise DataError(f"latent/condition shape mismatch: {x_t.shape} vs {cond.shape}")
        if x_t.shape[1] != self.config.input_length:
            raise DataError(
                f"expected length {self.config.input_length}, got {x_t.shape[1]}")
        bsz, klen = x_t.shape
        level = np.broadcast_to(np.asarray(level, dtype=np.float64), (bsz,))

        emb = self._embed(level)
        stacked = np.stack([x_t, cond], axis=1)  # (B, 2, K)
        h = FeatureMap(self.conv_in(Tensor(stacked)), FREQ)

        skips = []
        for lvl in range(self.config.levels):
            h = FeatureMap(self.enc_res[lvl](h.values, emb), FREQ)
            h = self.enc_tfe[lvl](h, emb)
            if lvl == self.mid:
                h = self.enc_tff(h)
            skips.append(h)
            h = self.enc_down[lvl](h)

        h = FeatureMap(self.mid_res1(h.values, emb), FREQ)
        h = FeatureMap(self.mid_attn(h.values), FREQ)
        h = FeatureMap(self.mid_res2(h.values, emb), FREQ)

        for i, lvl in enumerate(reversed(range(self.config.levels))):
            h = self.dec_up[i](h)
            joined = ad.concat([h.values, skips[lvl].values], axis=1)
            h = FeatureMap(self.dec_res[i](joined, emb), FREQ)
            if lvl == self.mid:
                h = FeatureMap(self.dec_attn(h.values), FREQ)

        out = self.head_conv(ad.swish(self.head_gn(h.values)))
        return ad.reshape(out, (bsz, klen))

    def predict(self, x_t, level, cond) -> np.ndarray:
        """Inference-only forward pass; no tape is recorded."""
        squeeze = np.asarray(x_t).ndim == 1
        with ad.no_grad():
            out = self.forward(x_t, level, cond).data
        return out[0] if squeeze else out

    # ------------------------------------------------------------ metadata

    def describe(self) -> str:
        """Layer table with parameter counts, for the describe subcommand."""
        index = self.params.index_map()
        groups: dict[str, int] = {}
        for name, (_, shape) in index.items():
            layer = name.rsplit(".", 1)[0]
            groups[layer] = groups.get(layer, 0) + int(np.prod(shape, dtype=np.int64))
        width = max(len(n) for n in groups)
        lines = [f"{'layer':<{width}}  params"]
        for layer, cnt in groups.items():
            lines.append(f"{layer:<{width}}  {cnt}")
        lines.append(f"{'total':<{width}}  {self.params.count}")
        return "\n".join(lines)
