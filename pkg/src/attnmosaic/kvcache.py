"""Staircase-quantized KV cache around a toy single-head decoder.

Cached keys/values live in two regions: a full-precision residual holding
the newest tokens (at most one segment long) and, behind it, fixed-size
groups quantized to fewer and fewer bits as they age. A group's bit width
follows its age in whole segments behind the sequence end: the newest
segment is full precision, and every further segment steps one rung down
the bit ladder, with the final rung open-ended. The top rung (16 bits)
denotes full precision and is stored as raw floats; lower rungs use
asymmetric min/max integer quantization with per-channel parameters for
keys and per-token parameters for values.

Decoding is sequential: a decoder instance owns its cache and is not
shareable across concurrent callers. quantize / dequantize /
staircase_bits are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DecoderStateError, EmptyPromptError

__all__ = [
    "FULL_PRECISION_BITS",
    "QuantSpec",
    "quantize",
    "dequantize",
    "StaircaseConfig",
    "staircase_bits",
    "CachedGroup",
    "StaircaseCache",
    "DecoderWeights",
    "ToyDecoder",
    "baseline_decode",
    "baseline_cache_bits",
]

FULL_PRECISION_BITS = 16
_ALLOWED_BITS = (1, 2, 4, 8, 16)


@dataclass(frozen=True)
class QuantSpec:
    """Affine parameters mapping reals onto a B-bit integer grid."""

    bits: int
    zero_point: float
    scale: float


def quantize(values, bits: int) -> tuple[np.ndarray, QuantSpec]:
    """Quantize a tensor to B-bit codes with min/max zero-point and scale.

    ``zero_point = min(X)``, ``scale = (max(X) - min(X)) / (2^B - 1)``,
    codes rounded to nearest (ties to even) and clamped to the code range.
    A constant tensor gets scale 1 and all-zero codes so it round-trips
    exactly.
    """
    if bits not in _ALLOWED_BITS:
        raise ValueError(f"bits must be one of {_ALLOWED_BITS}")
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("cannot quantize an empty tensor")
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot quantize non-finite values")
    lo = float(x.min())
    hi = float(x.max())
    if hi == lo:
        return np.zeros_like(x, dtype=np.int64), QuantSpec(bits, lo, 1.0)
    scale = (hi - lo) / (2**bits - 1)
    codes = np.clip(np.rint((x - lo) / scale), 0, 2**bits - 1).astype(np.int64)
    return codes, QuantSpec(bits, lo, scale)


def dequantize(codes, spec: QuantSpec) -> np.ndarray:
    """Invert :func:`quantize`: ``codes * scale + zero_point``."""
    return np.asarray(codes, dtype=float) * spec.scale + spec.zero_point


@dataclass(frozen=True)
class StaircaseConfig:
    """Segment/group sizes and the descending bit ladder."""

    segment_size: int
    group_size: int
    bit_ladder: tuple[int, ...] = (16, 8, 4, 2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bit_ladder", tuple(self.bit_ladder))
        if self.segment_size < 1:
            raise ValueError("segment_size must be >= 1")
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.segment_size % self.group_size != 0:
            raise ValueError("group_size must divide segment_size")
        if not self.bit_ladder:
            raise ValueError("bit_ladder must be nonempty")
        if self.bit_ladder[0] != FULL_PRECISION_BITS:
            raise ValueError("bit_ladder must start at 16 (full precision)")
        for b in self.bit_ladder:
            if b not in _ALLOWED_BITS:
                raise ValueError(f"ladder bits must be one of {_ALLOWED_BITS}")
        if any(a <= b for a, b in zip(self.bit_ladder, self.bit_ladder[1:])):
            raise ValueError("bit_ladder must be strictly decreasing")

    @property
    def num_levels(self) -> int:
        return len(self.bit_ladder)


def staircase_bits(newest_token: int, total_tokens: int, config: StaircaseConfig) -> int:
    """Bit width for a group whose newest token has the given index.

    Age is counted in whole segments behind the sequence end; the ladder's
    last rung is open-ended. Rung 0 covers the residual region and groups
    not yet a full segment old.
    """
    if not 0 <= newest_token < total_tokens:
        raise ValueError("newest_token must lie in [0, total_tokens)")
    age = total_tokens - 1 - newest_token
    rung = min(age // config.segment_size, config.num_levels - 1)
    return config.bit_ladder[rung]


@dataclass
class CachedGroup:
    """One quantized (or raw, at the full-precision rung) token group.

    ``axis`` is the reduction axis for the quantization parameters:
    0 yields one (zero, scale) per channel (keys), 1 one per token row
    (values).
    """

    start: int
    end: int
    bits: int
    axis: int
    raw: np.ndarray | None = None
    codes: np.ndarray | None = None
    zero_points: np.ndarray | None = field(default=None, repr=False)
    scales: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def build(cls, values: np.ndarray, bits: int, axis: int, start: int, end: int) -> "CachedGroup":
        if bits == FULL_PRECISION_BITS:
            return cls(start=start, end=end, bits=bits, axis=axis, raw=values.copy())
        lo = values.min(axis=axis)
        hi = values.max(axis=axis)
        scale = np.where(hi == lo, 1.0, (hi - lo) / (2**bits - 1))
        lo_b, scale_b = _broadcast_specs(lo, scale, axis)
        codes = np.clip(np.rint((values - lo_b) / scale_b), 0, 2**bits - 1).astype(np.int64)
        return cls(start=start, end=end, bits=bits, axis=axis,
                   codes=codes, zero_points=lo, scales=scale)

    @property
    def num_tokens(self) -> int:
        return self.end - self.start

    def dequantized(self) -> np.ndarray:
        if self.raw is not None:
            return self.raw
        lo_b, scale_b = _broadcast_specs(self.zero_points, self.scales, self.axis)
        return self.codes * scale_b + lo_b

    def requantized(self, bits: int) -> "CachedGroup":
        """Rebuild this group at fewer bits from its dequantized values."""
        return CachedGroup.build(self.dequantized(), bits, self.axis, self.start, self.end)

    def storage_bits(self, model_dim: int) -> int:
        """Payload bits plus 16-bit zero/scale overhead per quantized slice."""
        if self.raw is not None:
            return self.num_tokens * model_dim * FULL_PRECISION_BITS
        num_specs = model_dim if self.axis == 0 else self.num_tokens
        return self.num_tokens * model_dim * self.bits + num_specs * 2 * FULL_PRECISION_BITS


def _broadcast_specs(zero_points, scales, axis):
    if axis == 0:
        return zero_points[None, :], scales[None, :]
    return zero_points[:, None], scales[:, None]


class StaircaseCache:
    """Quantized groups plus full-precision residual for keys and values."""

    def __init__(self, config: StaircaseConfig, model_dim: int):
        self.config = config
        self.model_dim = model_dim
        self.k_groups: list[CachedGroup] = []
        self.v_groups: list[CachedGroup] = []
        self.k_residual = np.empty((0, model_dim))
        self.v_residual = np.empty((0, model_dim))
        self.total_tokens = 0

    @classmethod
    def from_prefill(cls, k_full: np.ndarray, v_full: np.ndarray,
                     config: StaircaseConfig) -> "StaircaseCache":
        """Split prompt projections into groups and residual.

        The newest ``min(segment_size, prompt_len)`` tokens stay in the
        residual; older tokens are packed into groups of ``group_size``
        working back from the residual boundary, leaving any remainder as
        a single shorter group at the oldest end.
        """
        prompt_len, model_dim = k_full.shape
        cache = cls(config, model_dim)
        cache.total_tokens = prompt_len
        residual_len = min(config.segment_size, prompt_len)
        grouped_len = prompt_len - residual_len
        cache.k_residual = k_full[grouped_len:].copy()
        cache.v_residual = v_full[grouped_len:].copy()

        starts = [0]
        remainder = grouped_len % config.group_size
        if remainder:
            starts.append(remainder)
        starts.extend(range(remainder + config.group_size, grouped_len + 1, config.group_size))
        for start, end in zip(starts, starts[1:]):
            bits = staircase_bits(end - 1, prompt_len, config)
            cache.k_groups.append(CachedGroup.build(k_full[start:end], bits, 0, start, end))
            cache.v_groups.append(CachedGroup.build(v_full[start:end], bits, 1, start, end))
        return cache

    @property
    def residual_len(self) -> int:
        return self.k_residual.shape[0]

    @property
    def grouped_len(self) -> int:
        return self.total_tokens - self.residual_len

    def append(self, t_k: np.ndarray, t_v: np.ndarray) -> None:
        """Add one token, spill a full group on overflow, age the ladder."""
        self.k_residual = np.vstack([self.k_residual, t_k.reshape(1, -1)])
        self.v_residual = np.vstack([self.v_residual, t_v.reshape(1, -1)])
        self.total_tokens += 1

        if self.residual_len > self.config.segment_size:
            g = self.config.group_size
            start = self.grouped_len
            bits = staircase_bits(start + g - 1, self.total_tokens, self.config)
            self.k_groups.append(
                CachedGroup.build(self.k_residual[:g], bits, 0, start, start + g))
            self.v_groups.append(
                CachedGroup.build(self.v_residual[:g], bits, 1, start, start + g))
            self.k_residual = self.k_residual[g:]
            self.v_residual = self.v_residual[g:]

        for groups in (self.k_groups, self.v_groups):
            for i, group in enumerate(groups):
                target = staircase_bits(group.end - 1, self.total_tokens, self.config)
                if target < group.bits:
                    groups[i] = group.requantized(target)

    def grouped_keys(self) -> np.ndarray:
        if not self.k_groups:
            return np.empty((0, self.model_dim))
        return np.vstack([g.dequantized() for g in self.k_groups])

    def grouped_values(self) -> np.ndarray:
        if not self.v_groups:
            return np.empty((0, self.model_dim))
        return np.vstack([g.dequantized() for g in self.v_groups])

    def theoretical_bits(self) -> int:
        """Deterministic storage ledger: group payloads + specs + residual."""
        total = sum(g.storage_bits(self.model_dim) for g in self.k_groups)
        total += sum(g.storage_bits(self.model_dim) for g in self.v_groups)
        total += 2 * self.residual_len * self.model_dim * FULL_PRECISION_BITS
        return total


def baseline_cache_bits(total_tokens: int, model_dim: int) -> int:
    """Full-precision K and V cache ledger for the same token count."""
    return 2 * total_tokens * model_dim * FULL_PRECISION_BITS


@dataclass(frozen=True)
class DecoderWeights:
    """Fixed projection matrices for the toy decoder."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    @classmethod
    def seeded(cls, model_dim: int, seed: int) -> "DecoderWeights":
        rng = np.random.default_rng(seed)
        scale = 1.0 / math.sqrt(model_dim)
        return cls(
            w_q=rng.standard_normal((model_dim, model_dim)) * scale,
            w_k=rng.standard_normal((model_dim, model_dim)) * scale,
            w_v=rng.standard_normal((model_dim, model_dim)) * scale,
        )

    @property
    def model_dim(self) -> int:
        return self.w_q.shape[0]


class ToyDecoder:
    """Single-layer, single-head autoregressive decoder over the cache.

    No feed-forward block and no output projection: just enough to drive
    the prefill/decode cache protocol end to end.
    """

    def __init__(self, weights: DecoderWeights, config: StaircaseConfig):
        self.weights = weights
        self.config = config
        self.cache: StaircaseCache | None = None
        self.last_attention: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def model_dim(self) -> int:
        return self.weights.model_dim

    def prefill(self, prompt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project the prompt, seed the cache, return exact K and V.

        The returned projections are full precision regardless of the
        ladder; only the cache holds quantized groups.
        """
        prompt = np.atleast_2d(np.asarray(prompt, dtype=float))
        if prompt.shape[0] == 0:
            raise EmptyPromptError("prompt must contain at least one token")
        k_full = prompt @ self.weights.w_k
        v_full = prompt @ self.weights.w_v
        self.cache = StaircaseCache.from_prefill(k_full, v_full, self.config)
        return k_full, v_full

    def decode_step(self, token: np.ndarray) -> np.ndarray:
        """Append one token and attend over the whole cached sequence.

        Attention runs against dequantized groups plus the raw residual,
        scaled by 1/sqrt(d); the softmax is split into its grouped and
        residual parts before the weighted value sums.
        """
        if self.cache is None:
            raise DecoderStateError("decode_step called before prefill")
        token = np.asarray(token, dtype=float).reshape(-1)
        t_q = token @ self.weights.w_q
        t_k = token @ self.weights.w_k
        t_v = token @ self.weights.w_v
        self.cache.append(t_k, t_v)

        k_grouped = self.cache.grouped_keys()
        v_grouped = self.cache.grouped_values()
        logits = np.concatenate([
            k_grouped @ t_q, self.cache.k_residual @ t_q
        ]) / math.sqrt(self.model_dim)
        weights = np.exp(logits - logits.max())
        weights /= weights.sum()
        split = self.cache.grouped_len
        attn_grouped, attn_residual = weights[:split], weights[split:]
        self.last_attention = (attn_grouped, attn_residual)
        return attn_grouped @ v_grouped + attn_residual @ self.cache.v_residual


def baseline_decode(prompt: np.ndarray, tokens: np.ndarray,
                    weights: DecoderWeights) -> np.ndarray:
    """Oracle decoder: full-precision, unbounded cache, same weights.

    Recomputes projections from scratch at every step so it shares no
    cache machinery with the staircase path.
    """
    prompt = np.atleast_2d(np.asarray(prompt, dtype=float))
    if prompt.shape[0] == 0:
        raise EmptyPromptError("prompt must contain at least one token")
    history = prompt
    outputs = []
    for token in np.atleast_2d(np.asarray(tokens, dtype=float)):
        history = np.vstack([history, token[None, :]])
        t_q = token @ weights.w_q
        keys = history @ weights.w_k
        values = history @ weights.w_v
        logits = keys @ t_q / math.sqrt(weights.model_dim)
        attn = np.exp(logits - logits.max())
        attn /= attn.sum()
        outputs.append(attn @ values)
    return np.array(outputs).reshape(-1, weights.model_dim)
