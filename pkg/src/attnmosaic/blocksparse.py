"""Probabilistic block-sparse attention on desk-scale dense tensors.

Query/key matrices are split into blocks of ``block_rows`` x ``block_cols``
tokens. Each block row/column gets a keep probability derived from its
distance to the diagonal (near-diagonal blocks are most related), which is
blended with a random draw into a decision factor and compared against an
adjusted sparsity threshold. Dropped rows/columns are skipped during
attention, except that every token always keeps sight of its own diagonal
key block so no softmax row is ever empty.

All functions are pure; the seeded generator used by :func:`build_mask` is
owned per call and never shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AttnConfig",
    "AttnTensors",
    "BlockMaskPlan",
    "block_pdf",
    "row_probability",
    "col_probability",
    "decision_factor",
    "adjusted_sparsity",
    "build_mask",
    "sparse_attention",
    "dense_attention",
]


@dataclass(frozen=True)
class AttnConfig:
    """Run parameters for one mask build / attention call."""

    context_len: int
    head_dim: int = 64
    block_rows: int = 16
    block_cols: int = 16
    threshold_range: int = 1      # block distances <= this keep probability 1
    weight: float = 1.0           # blend between probability (1) and randomness (0)
    target_drop: float = 0.0      # targeted dropping percentage in [0, 100]
    seed: int = 0
    causal: bool = True

    def __post_init__(self) -> None:
        if self.context_len < 1:
            raise ValueError("context_len must be >= 1")
        if self.head_dim < 1:
            raise ValueError("head_dim must be >= 1")
        if self.block_rows < 1 or self.block_cols < 1:
            raise ValueError("block sizes must be >= 1")
        if self.threshold_range < 0:
            raise ValueError("threshold_range must be >= 0")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("weight must be in [0, 1]")
        if not 0.0 <= self.target_drop <= 100.0:
            raise ValueError("target_drop must be in [0, 100]")

    @property
    def num_row_blocks(self) -> int:
        return -(-self.context_len // self.block_rows)

    @property
    def num_col_blocks(self) -> int:
        return -(-self.context_len // self.block_cols)


@dataclass(frozen=True)
class AttnTensors:
    """Single-batch, single-head query/key/value matrices (N x head_dim)."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        for name, m in (("q", self.q), ("k", self.k), ("v", self.v)):
            if m.ndim != 2 or m.shape != self.q.shape:
                raise ValueError(f"{name} must match q's 2-D shape")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} contains non-finite entries")

    @classmethod
    def random(cls, context_len: int, head_dim: int, seed) -> "AttnTensors":
        rng = np.random.default_rng(seed)
        shape = (context_len, head_dim)
        return cls(
            q=rng.standard_normal(shape),
            k=rng.standard_normal(shape),
            v=rng.standard_normal(shape),
        )


@dataclass(frozen=True)
class BlockMaskPlan:
    """Keep/drop plan for one (config, seed) pair."""

    row_probs: np.ndarray      # (M_r,) in (0, 1]
    col_probs: np.ndarray      # (M_c,) in (0, 1]
    row_decisions: np.ndarray  # (M_r,)
    col_decisions: np.ndarray  # (M_c,)
    s_adj: float
    kept_rows: np.ndarray = field(repr=False)  # (M_r,) bool
    kept_cols: np.ndarray = field(repr=False)  # (M_c,) bool

    @property
    def kept_row_fraction(self) -> float:
        return float(np.mean(self.kept_rows))

    @property
    def kept_col_fraction(self) -> float:
        return float(np.mean(self.kept_cols))


def block_pdf(distance: int, threshold_range: int) -> float:
    """Keep weight for a block at the given diagonal distance.

    1 inside the threshold range, then a harmonic-difference decay whose
    tail from ``threshold_range + 1`` to ``M - 1`` telescopes to
    ``1 - 1/(M - threshold_range)``.
    """
    if distance < 0 or threshold_range < 0:
        raise ValueError("distance and threshold_range must be >= 0")
    if distance <= threshold_range:
        return 1.0
    step = distance - threshold_range
    return 1.0 / (step * (step + 1))


def row_probability(row_block: int, config: AttnConfig) -> float:
    """Mean keep weight over the key blocks a query block row spans.

    Causal rows average over key blocks 0..q (distances q..0); non-causal
    rows average over every key block.
    """
    if not 0 <= row_block < config.num_row_blocks:
        raise ValueError("row_block out of range")
    if config.causal:
        distances = np.arange(row_block + 1)
    else:
        distances = np.abs(row_block - np.arange(config.num_col_blocks))
    return _mean_pdf(distances, config.threshold_range)


def col_probability(col_block: int, config: AttnConfig) -> float:
    """Mean keep weight over the query blocks a key block column spans.

    Mirror of :func:`row_probability`: causal columns average over query
    blocks at-or-below the diagonal (clamped to hold at least the diagonal
    term when block shapes make the column ragged).
    """
    if not 0 <= col_block < config.num_col_blocks:
        raise ValueError("col_block out of range")
    if config.causal:
        distances = np.arange(max(config.num_row_blocks - col_block, 1))
    else:
        distances = np.abs(col_block - np.arange(config.num_row_blocks))
    return _mean_pdf(distances, config.threshold_range)


def _mean_pdf(distances: np.ndarray, threshold_range: int) -> float:
    return float(
        sum(block_pdf(int(n), threshold_range) for n in distances) / len(distances)
    )


def decision_factor(prob: float, draw: float, weight: float) -> float:
    """Blend a keep probability with a uniform draw: prob*w + draw*(1-w)."""
    return prob * weight + draw * (1.0 - weight)


def adjusted_sparsity(probs, target_drop: float, weight: float) -> float:
    """Keep/drop threshold: percentile of probs blended with target_drop/100.

    The percentile is nearest-rank (``sorted[ceil(p/100 * len) - 1]``);
    ``target_drop = 0`` selects the minimum.
    """
    arr = np.sort(np.asarray(probs, dtype=float))
    if arr.size == 0:
        raise ValueError("probs must be nonempty")
    if target_drop <= 0:
        percentile = arr[0]
    else:
        rank = math.ceil(target_drop * arr.size / 100.0)
        percentile = arr[min(rank, arr.size) - 1]
    return float(percentile * weight + (target_drop / 100.0) * (1.0 - weight))


def build_mask(config: AttnConfig) -> BlockMaskPlan:
    """Draw decision factors and derive the keep/drop plan for a config.

    One fresh uniform draw per block row, then one per block column, from a
    generator seeded with ``config.seed``; identical configs therefore
    produce bit-identical plans. The sparsity threshold pools row and
    column probabilities.
    """
    rng = np.random.default_rng(config.seed)
    row_probs = np.array([row_probability(q, config) for q in range(config.num_row_blocks)])
    col_probs = np.array([col_probability(c, config) for c in range(config.num_col_blocks)])
    row_draws = rng.random(config.num_row_blocks)
    col_draws = rng.random(config.num_col_blocks)
    row_decisions = row_probs * config.weight + row_draws * (1.0 - config.weight)
    col_decisions = col_probs * config.weight + col_draws * (1.0 - config.weight)
    s_adj = adjusted_sparsity(
        np.concatenate([row_probs, col_probs]), config.target_drop, config.weight
    )
    return BlockMaskPlan(
        row_probs=row_probs,
        col_probs=col_probs,
        row_decisions=row_decisions,
        col_decisions=col_decisions,
        s_adj=s_adj,
        kept_rows=row_decisions >= s_adj,
        kept_cols=col_decisions >= s_adj,
    )


def dense_attention(tensors: AttnTensors, causal: bool) -> np.ndarray:
    """Exact softmax(Q K^T / sqrt(d)) V without any block dropping."""
    n, head_dim = tensors.q.shape
    scores = (tensors.q @ tensors.k.T) / math.sqrt(head_dim)
    if causal:
        future = np.triu(np.ones((n, n), dtype=bool), k=1)
        scores = np.where(future, -np.inf, scores)
    return _softmax_rows(scores) @ tensors.v


def sparse_attention(
    tensors: AttnTensors, plan: BlockMaskPlan, config: AttnConfig
) -> np.ndarray:
    """Block-streamed attention that skips dropped rows/columns.

    Visibility of score (i, j): the causal mask always applies; beyond
    that, j is visible iff both i's row block and j's column block are
    kept, or j lies in i's own diagonal key block (the rescue that keeps
    every softmax row non-empty). Blocks with no visible entry are skipped
    entirely; kept blocks stream through a running-max online softmax, so
    the full score matrix is never materialized.
    """
    q, k, v = tensors.q, tensors.k, tensors.v
    n, head_dim = q.shape
    scale = 1.0 / math.sqrt(head_dim)
    br, bc = config.block_rows, config.block_cols
    out = np.empty_like(q, dtype=float)

    for qb in range(config.num_row_blocks):
        r0, r1 = qb * br, min((qb + 1) * br, n)
        rows = np.arange(r0, r1)
        diag_blocks = rows // bc
        run_max = np.full(r1 - r0, -np.inf)
        run_sum = np.zeros(r1 - r0)
        acc = np.zeros((r1 - r0, head_dim))
        row_kept = bool(plan.kept_rows[qb])

        for cb in range(config.num_col_blocks):
            c0, c1 = cb * bc, min((cb + 1) * bc, n)
            if config.causal and c0 > rows[-1]:
                break
            pair_kept = row_kept and bool(plan.kept_cols[cb])
            rescued = diag_blocks == cb
            if not pair_kept and not rescued.any():
                continue

            visible = np.ones((r1 - r0, c1 - c0), dtype=bool)
            if not pair_kept:
                visible &= rescued[:, None]
            if config.causal:
                visible &= np.arange(c0, c1)[None, :] <= rows[:, None]
            if not visible.any():
                continue

            scores = (q[r0:r1] @ k[c0:c1].T) * scale
            scores = np.where(visible, scores, -np.inf)
            new_max = np.maximum(run_max, scores.max(axis=1))
            safe_max = np.where(np.isfinite(new_max), new_max, 0.0)
            weights = np.exp(scores - safe_max[:, None])
            rescale = np.where(run_max > -np.inf, np.exp(run_max - safe_max), 0.0)
            run_sum = rescale * run_sum + weights.sum(axis=1)
            acc = rescale[:, None] * acc + weights @ v[c0:c1]
            run_max = new_max

        # diagonal rescue guarantees run_sum > 0 for every row
        out[r0:r1] = acc / run_sum[:, None]
    return out


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    peak = scores.max(axis=1, keepdims=True)
    exp = np.exp(scores - peak)
    return exp / exp.sum(axis=1, keepdims=True)
