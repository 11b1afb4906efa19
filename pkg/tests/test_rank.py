import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from corp.calib import AttnCalibStats, MomentAccumulator
from corp.errors import EmptyAccumulator, ShapeMismatch, ValidationError
from corp.rank import (
    IndexPartition,
    partition_from_scores,
    rank_attn,
    rank_mlp_activation,
    rank_mlp_magnitude,
)
from corp.vit import gelu


def test_partition_invariants_enforced():
    with pytest.raises(ValidationError):
        IndexPartition(kept=(), pruned=(0,), width=1)
    with pytest.raises(ValidationError):
        IndexPartition(kept=(0, 1), pruned=(1,), width=2)
    with pytest.raises(ValidationError):
        IndexPartition(kept=(1, 0), pruned=(), width=2)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.floats(0.0, 0.99), st.integers(0, 2**31))
def test_partition_property(width, sparsity, seed):
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=width)
    part = partition_from_scores(scores, sparsity)
    assert len(part.kept) >= 1
    assert sorted(part.kept + part.pruned) == list(range(width))
    assert len(part.kept) == int(np.ceil((1 - sparsity) * width))
    # positive rescaling never changes the selection
    again = partition_from_scores(scores * 7.5, sparsity)
    assert again == part


def test_no_pruning_at_zero_sparsity():
    acc = MomentAccumulator(4).accumulate(np.eye(4))
    part = rank_mlp_activation(acc, 0.0)
    assert part.pruned == ()


def test_activation_hand_example():
    # diagonal second moments (4, 1, 9, 0), s = 0.5 -> keep {0, 2}
    data = np.diag([2.0, 1.0, 3.0, 0.0])
    acc = MomentAccumulator(4).accumulate(data)
    part = rank_mlp_activation(acc, 0.5)
    assert part.kept == (0, 2)
    assert part.pruned == (1, 3)


def test_activation_matches_sort_oracle():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(300, 16))
    acc = MomentAccumulator(16).accumulate(data)
    part = rank_mlp_activation(acc, 0.4)
    scores = (data ** 2).mean(axis=0)
    n_keep = int(np.ceil(0.6 * 16))
    expect = np.sort(np.argsort(-scores, kind="stable")[:n_keep])
    assert np.array_equal(part.kept, expect)


def test_activation_empty():
    with pytest.raises(EmptyAccumulator):
        rank_mlp_activation(MomentAccumulator(3), 0.5)


def test_magnitude_zero_column_pruned_first():
    rng = np.random.default_rng(1)
    w1 = rng.normal(size=(6, 4))
    w2 = rng.normal(size=(4, 6))
    w2[:, 3] = 0.0
    part = rank_mlp_magnitude(w1, w2, 1.0 / 6.0)
    assert part.pruned == (3,)


def test_magnitude_identity_toy():
    scales = np.array([3.0, 1.0, 2.0, 5.0])
    w1 = np.diag(scales)
    w2 = np.diag(scales)
    part = rank_mlp_magnitude(w1, w2, 0.5)
    assert part.kept == (0, 3)


def test_magnitude_matches_bruteforce():
    rng = np.random.default_rng(2)
    w1 = rng.normal(size=(12, 5))
    w2 = rng.normal(size=(5, 12))
    part = rank_mlp_magnitude(w1, w2, 0.25)
    scores = np.array([np.linalg.norm(w1[j]) * np.linalg.norm(w2[:, j])
                       for j in range(12)])
    expect = partition_from_scores(scores, 0.25)
    assert part == expect


def test_magnitude_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        rank_mlp_magnitude(np.zeros((4, 3)), np.zeros((3, 5)), 0.5)


def _stats_from_qk(q, k):
    return AttnCalibStats(g_q=[[q.T @ q]], g_k=[[k.T @ k]], n_tokens=q.shape[0])


def test_attn_zero_column_pruned_first():
    rng = np.random.default_rng(3)
    q = rng.normal(size=(50, 4))
    k = rng.normal(size=(50, 4))
    q[:, 2] = 0.0
    part = rank_attn(_stats_from_qk(q, k), 0, 0, 0.25)
    assert part.pruned == (2,)


def test_attn_hand_example():
    stats = AttnCalibStats(g_q=[[np.diag([1.0, 2.0, 3.0, 4.0])]],
                           g_k=[[np.diag([4.0, 3.0, 2.0, 1.0])]],
                           n_tokens=10)
    part = rank_attn(stats, 0, 0, 0.5)
    # scores (4, 6, 6, 4): the two sixes win, tie is moot, boundary tie
    # between indices 0 and 3 resolved to the lower index in pruning order
    assert part.kept == (1, 2)
    assert part.pruned == (0, 3)


def test_attn_spearman_vs_weight_norms():
    # isotropic tokens: logit-energy ordering tracks the weight-norm product
    rng = np.random.default_rng(4)
    rhos = []
    for _ in range(20):
        d, dh, n = 32, 8, 4000
        x = rng.normal(size=(n, d))
        wq = rng.normal(size=(d, dh)) * rng.uniform(0.5, 2.0, size=(1, dh))
        wk = rng.normal(size=(d, dh)) * rng.uniform(0.5, 2.0, size=(1, dh))
        q, k = x @ wq, x @ wk
        stats = _stats_from_qk(q, k)
        act_scores = np.diag(stats.g_q[0][0]) * np.diag(stats.g_k[0][0])
        mag_scores = (np.linalg.norm(wq, axis=0) * np.linalg.norm(wk, axis=0)) ** 2
        rhos.append(spearmanr(act_scores, mag_scores).statistic)
    assert np.mean(rhos) >= 0.95


def test_mlp_activation_vs_magnitude_agreement():
    # isotropic inputs, unit-norm output columns: the two rankings agree
    rng = np.random.default_rng(5)
    d, hidden, n = 32, 32, 10_000
    w1 = rng.normal(size=(hidden, d)) * rng.uniform(0.3, 3.0, size=(hidden, 1))
    w2 = rng.normal(size=(d, hidden))
    w2 /= np.linalg.norm(w2, axis=0, keepdims=True)
    x = rng.normal(size=(n, d))
    acts = gelu(x @ w1.T)
    acc = MomentAccumulator(hidden).accumulate(acts)
    act_part = rank_mlp_activation(acc, 0.5)
    mag_part = rank_mlp_magnitude(w1, w2, 0.5)
    overlap = len(set(act_part.kept) & set(mag_part.kept)) / len(act_part.kept)
    assert overlap >= 0.9
