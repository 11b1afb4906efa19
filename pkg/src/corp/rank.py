"""Importance scoring and kept/pruned index selection.

All rankers reduce to the same selection rule: keep the
ceil((1 - sparsity) * width) highest-scoring indices, breaking ties in
favor of the lower index so pruning masks are reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np

from .calib import AttnCalibStats, MomentAccumulator
from .errors import EmptyAccumulator, ShapeMismatch, ValidationError


@dataclass(frozen=True)
class IndexPartition:
    """Kept/pruned split of one prunable axis; both sides sorted."""

    kept: tuple
    pruned: tuple
    width: int

    def __post_init__(self):
        kept, pruned = set(self.kept), set(self.pruned)
        if not self.kept:
            raise ValidationError("kept set must be nonempty")
        if kept & pruned:
            raise ValidationError("kept and pruned sets overlap")
        if kept | pruned != set(range(self.width)):
            raise ValidationError("kept + pruned must cover 0..width-1")
        if list(self.kept) != sorted(kept) or list(self.pruned) != sorted(pruned):
            raise ValidationError("index lists must be sorted")


def partition_from_scores(scores, sparsity: float) -> IndexPartition:
    """Keep the top ceil((1-s) * width) scores, lower index wins ties."""
    if not (0.0 <= sparsity < 1.0):
        raise ValidationError(f"sparsity must be in [0, 1), got {sparsity}")
    scores = np.asarray(scores, dtype=np.float64)
    width = scores.shape[0]
    n_keep = int(math.ceil((1.0 - sparsity) * width))
    n_keep = max(1, min(width, n_keep))
    order = np.argsort(-scores, kind="stable")
    kept = np.sort(order[:n_keep])
    pruned = np.sort(order[n_keep:])
    return IndexPartition(kept=tuple(int(i) for i in kept),
                          pruned=tuple(int(i) for i in pruned),
                          width=width)


def rank_mlp_activation(acc: MomentAccumulator, sparsity: float) -> IndexPartition:
    """Score hidden channel j by its mean squared activation E[x_j^2]."""
    if acc.n < 1:
        raise EmptyAccumulator("no samples accumulated")
    scores = np.diag(acc.second_moment())
    return partition_from_scores(scores, sparsity)


def rank_mlp_magnitude(w1, w2, sparsity: float) -> IndexPartition:
    """Score channel j by |W1 row j| * |W2 column j| (end-to-end gain bound)."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w1.ndim != 2 or w2.ndim != 2 or w1.shape[0] != w2.shape[1]:
        raise ShapeMismatch(
            f"w1 {w1.shape} and w2 {w2.shape} do not share a hidden axis"
        )
    scores = np.linalg.norm(w1, axis=1) * np.linalg.norm(w2, axis=0)
    return partition_from_scores(scores, sparsity)


def rank_attn(stats: AttnCalibStats, block: int, head: int,
              sparsity: float) -> IndexPartition:
    """Score head dimension j by its expected logit energy.

    Uses the product of per-column mean energies diag(G_Q)_j * diag(G_K)_j
    / n^2; for near-isotropic tokens this induces the same ordering as
    the per-token product expectation.
    """
    g_q, g_k = stats.head(block, head)
    n = max(stats.n_tokens, 1)
    scores = np.diag(g_q) * np.diag(g_k) / float(n) ** 2
    return partition_from_scores(scores, sparsity)
