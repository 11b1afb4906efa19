"""Streaming calibration statistics.

One pass over the calibration set produces everything the closed-form
fits consume: per-block moment accumulators over post-GELU MLP hidden
activations and per-(block, head) Q/K Gram matrices.  A sample is one
token's activation vector (the class token included), so memory is
O(width^2) per tap regardless of calibration size.  All accumulation in
float64.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyAccumulator, MissingStats, ShapeMismatch, WidthMismatch
from .vit import VitModel, forward


class MomentAccumulator:
    """Running count, sum and sum of outer products of sample vectors."""

    def __init__(self, width: int):
        self.width = int(width)
        self.n = 0
        self.sum = np.zeros(self.width)
        self.sum_outer = np.zeros((self.width, self.width))

    def accumulate(self, batch) -> "MomentAccumulator":
        batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
        if batch.shape[1] != self.width:
            raise WidthMismatch(f"batch width {batch.shape[1]} != accumulator width {self.width}")
        self.n += batch.shape[0]
        self.sum += batch.sum(axis=0)
        self.sum_outer += batch.T @ batch
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.width != self.width:
            raise WidthMismatch("cannot merge accumulators of different widths")
        self.n += other.n
        self.sum += other.sum
        self.sum_outer += other.sum_outer
        return self

    def mean(self) -> np.ndarray:
        if self.n < 1:
            raise EmptyAccumulator("no samples accumulated")
        return self.sum / self.n

    def second_moment(self) -> np.ndarray:
        """E[x x^T], symmetrized."""
        if self.n < 1:
            raise EmptyAccumulator("no samples accumulated")
        m = self.sum_outer / self.n
        return 0.5 * (m + m.T)

    def covariance(self) -> np.ndarray:
        mu = self.mean()
        return self.second_moment() - np.outer(mu, mu)


def second_moments(acc: MomentAccumulator, partition):
    """Uncentered blocks (mu_S, mu_P, sigma_SS, sigma_PS) for a partition.

    sigma_SS = E[x_S x_S^T] and sigma_PS = E[x_P x_S^T]; centering is the
    fit's job, not the accumulator's.
    """
    if acc.n < 1:
        raise EmptyAccumulator("no samples accumulated")
    if partition.width != acc.width:
        raise WidthMismatch(
            f"partition width {partition.width} != accumulator width {acc.width}"
        )
    s = np.asarray(partition.kept, dtype=np.intp)
    p = np.asarray(partition.pruned, dtype=np.intp)
    mu = acc.mean()
    mom = acc.second_moment()
    return mu[s], mu[p], mom[np.ix_(s, s)], mom[np.ix_(p, s)]


@dataclass
class AttnCalibStats:
    """Full-width Q/K Grams per (block, head), summed over all tokens."""

    g_q: list = field(default_factory=list)   # [block][head] (d_h, d_h)
    g_k: list = field(default_factory=list)
    n_tokens: int = 0

    def head(self, block: int, head: int):
        try:
            return self.g_q[block][head], self.g_k[block][head]
        except IndexError:
            raise MissingStats(f"no statistics for block {block} head {head}")

    def merge(self, other: "AttnCalibStats") -> "AttnCalibStats":
        if len(other.g_q) != len(self.g_q):
            raise ShapeMismatch("cannot merge stats with different block counts")
        for b in range(len(self.g_q)):
            for h in range(len(self.g_q[b])):
                self.g_q[b][h] += other.g_q[b][h]
                self.g_k[b][h] += other.g_k[b][h]
        self.n_tokens += other.n_tokens
        return self


def collect_calibration(model: VitModel, images, batch_size: int = 32):
    """Single statistics pass over the calibration images.

    Returns (mlp_accs, attn_stats): one MomentAccumulator per block over
    post-GELU hidden activations, and AttnCalibStats with Q/K Grams
    (biases included, no softmax temperature applied).
    """
    images = np.asarray(images)
    if images.ndim != 4:
        raise ShapeMismatch(f"expected images (N, H, W, C), got {images.shape}")
    mlp_accs = [MomentAccumulator(b.mlp_kept) for b in model.blocks]
    stats = AttnCalibStats(
        g_q=[[np.zeros((w, w)) for w in b.attn_kept] for b in model.blocks],
        g_k=[[np.zeros((w, w)) for w in b.attn_kept] for b in model.blocks],
        n_tokens=0,
    )
    n = images.shape[0]
    step = max(1, int(batch_size))
    for start in range(0, n, step):
        chunk = images[start : start + step]
        _, trace = forward(model, chunk, want_trace=True)
        for b in range(len(model.blocks)):
            mlp_accs[b].accumulate(trace.mlp_acts[b])
            for h in range(len(model.blocks[b].attn_kept)):
                q = trace.q[b][h]
                k = trace.k[b][h]
                stats.g_q[b][h] += q.T @ q
                stats.g_k[b][h] += k.T @ k
        stats.n_tokens += chunk.shape[0] * model.config.tokens
    for b in range(len(model.blocks)):
        for h in range(len(model.blocks[b].attn_kept)):
            stats.g_q[b][h] = 0.5 * (stats.g_q[b][h] + stats.g_q[b][h].T)
            stats.g_k[b][h] = 0.5 * (stats.g_k[b][h] + stats.g_k[b][h].T)
    return mlp_accs, stats


def collect_attn_stats(model: VitModel, images, batch_size: int = 32) -> AttnCalibStats:
    """Q/K Grams over every token of every calibration image."""
    _, stats = collect_calibration(model, images, batch_size)
    return stats
