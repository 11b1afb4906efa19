"""Redundancy metrics and efficiency summaries.

Effective rank is the exponential of the Shannon entropy of the
normalized covariance spectrum; k95 is the smallest number of spectral
modes carrying 95% of the trace.  Both are functions of the eigenvalue
spectrum only, hence invariant under rotation of the covariance.  A
channel-space variant of k95 (sorted per-channel variances) is reported
alongside, as is per-element activation sparsity under an absolute
threshold.
"""

import numpy as np

from .calib import MomentAccumulator
from .errors import ShapeMismatch, ZeroTrace
from .vit import VitModel, count_flops, count_params, forward

DEFAULT_TAU = 1e-3
RARE_ACTIVE_FRACTION = 0.01


def _spectrum(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    w = np.linalg.eigvalsh(cov)
    w = np.maximum(w, 0.0)
    if w.sum() <= 0.0:
        raise ZeroTrace("covariance has zero trace")
    return np.sort(w)[::-1]


def effective_rank(cov) -> float:
    """exp(spectral entropy) of a PSD matrix, in [1, dim]."""
    w = _spectrum(cov)
    p = w / w.sum()
    p = p[p > 0]
    return float(np.exp(-np.sum(p * np.log(p))))


def k95(cov, energy: float = 0.95) -> int:
    """Smallest k such that the top-k eigenvalues hold `energy` of the trace."""
    w = _spectrum(cov)
    cum = np.cumsum(w)
    return int(np.searchsorted(cum, energy * cum[-1] - 1e-12) + 1)


def k95_channels(variances, energy: float = 0.95) -> int:
    """Channel-space analogue: sorted per-channel variances instead of modes."""
    v = np.sort(np.maximum(np.asarray(variances, dtype=np.float64), 0.0))[::-1]
    if v.sum() <= 0.0:
        raise ZeroTrace("variances sum to zero")
    cum = np.cumsum(v)
    return int(np.searchsorted(cum, energy * cum[-1] - 1e-12) + 1)


def activation_sparsity(samples, tau: float = DEFAULT_TAU) -> float:
    """Fraction of entries with |a| <= tau over all tokens and channels."""
    if tau < 0:
        raise ShapeMismatch("tau must be nonnegative")
    total = 0
    small = 0
    for batch in samples if isinstance(samples, (list, tuple)) else [samples]:
        batch = np.asarray(batch)
        total += batch.size
        small += int(np.count_nonzero(np.abs(batch) <= tau))
    if total == 0:
        return 0.0
    return small / total


def build_report(model: VitModel, images, batch_size: int = 32,
                 tau: float = DEFAULT_TAU) -> dict:
    """Table of redundancy metrics per MLP activation tap, plus params/FLOPs.

    One row per block, computed from a single streaming pass over the
    calibration images.  act_sparsity is per-element; act_sparsity_channel
    is the fraction of channels active on fewer than 1% of tokens.
    """
    images = np.asarray(images)
    accs = [MomentAccumulator(b.mlp_kept) for b in model.blocks]
    small = [0] * len(model.blocks)
    active = [np.zeros(b.mlp_kept, dtype=np.int64) for b in model.blocks]
    totals = [0] * len(model.blocks)

    step = max(1, int(batch_size))
    for start in range(0, images.shape[0], step):
        _, trace = forward(model, images[start : start + step], want_trace=True)
        for b, acts in enumerate(trace.mlp_acts):
            accs[b].accumulate(acts)
            mask = np.abs(acts) > tau
            small[b] += acts.size - int(np.count_nonzero(mask))
            active[b] += mask.sum(axis=0)
            totals[b] += acts.shape[0]

    taps = []
    for b, acc in enumerate(accs):
        cov = acc.covariance()
        dim = acc.width
        er = effective_rank(cov)
        ks = k95(cov)
        kc = k95_channels(np.diag(cov))
        rare = float(np.mean(active[b] < RARE_ACTIVE_FRACTION * totals[b]))
        taps.append({
            "name": f"block.{b}.mlp.act",
            "dim": dim,
            "eff_rank": er,
            "rank_ratio": er / dim,
            "k95": ks,
            "k95_ratio": ks / dim,
            "k95_channel": kc,
            "act_sparsity": small[b] / (totals[b] * dim) if totals[b] else 0.0,
            "act_sparsity_channel": rare,
        })
    kept = model.kept_widths()
    return {
        "taps": taps,
        "params": count_params(model.config, kept),
        "flops": count_flops(model.config, kept),
    }
