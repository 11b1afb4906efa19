"""Closed-form compensation fits and exact weight folds.

MLP: pruned post-GELU activations are modeled as x_P ~ B x_S + c with
(B, c) from centered ridge regression on calibration moments,

    B (Xbar_S Xbar_S^T + lambda I) = Xbar_P Xbar_S^T,
    c = mu_P - B mu_S,

then folded into the second linear: W_S <- W_S + W_P B, b <- b + W_P c.

Attention: the pruned logit term Q_P K_P^T is approximated by
Q_S M K_S^T, where M solves the regularized Sylvester equation

    (Q_S^T Q_S) M (K_S^T K_S) + lambda M = (Q_S^T Q_P)(K_P^T K_S),

and I + M is split by SVD into u v^T so the correction folds into the
kept projections: W_Q,S <- W_Q,S u, W_K,S <- W_K,S v (biases rotate the
same way, so the fold holds bias-included).

Fits run in float64 and report calibration reconstruction errors before
(prune-and-drop) and after compensation, all computable from the stored
moments without revisiting tokens.
"""

import math
from dataclasses import dataclass

import numpy as np

from .calib import AttnCalibStats
from .errors import InsufficientSamples, NonPositiveLambda, ShapeMismatch
from .linalg import solve_ridge, solve_sylvester_ridge, svd
from .rank import IndexPartition


@dataclass
class AffineCompensation:
    b_matrix: np.ndarray     # (|P|, |S|)
    c: np.ndarray            # (|P|,)
    lam: float
    pre_err: float = math.nan    # ||X_P||_F on calibration tokens
    post_err: float = math.nan   # ||X_P - (B X_S + c 1^T)||_F
    mean_err: float = math.nan   # ||X_P - mu_P 1^T||_F, the B=0 baseline
    cond: float = math.nan       # condition of the regularized system


@dataclass
class LogitCompensation:
    m: np.ndarray            # (|S|, |S|)
    u: np.ndarray
    v: np.ndarray            # u v^T = I + m
    lam: float
    pre_err: float = math.nan    # ||Q_P K_P^T||_F on calibration tokens
    post_err: float = math.nan   # ||Q_P K_P^T - Q_S M K_S^T||_F
    sylvester_residual: float = math.nan


@dataclass
class SiteReport:
    site: str
    kind: str                # "mlp" | "attn"
    kept: int
    pruned: int
    lam: float
    pre_err: float
    post_err: float
    cond: float = math.nan
    sylvester_residual: float = math.nan

    def to_dict(self) -> dict:
        return {
            "site": self.site,
            "kind": self.kind,
            "kept": self.kept,
            "pruned": self.pruned,
            "lambda": self.lam,
            "pre_err": self.pre_err,
            "post_err": self.post_err,
            "cond": None if math.isnan(self.cond) else self.cond,
            "sylvester_residual": (
                None if math.isnan(self.sylvester_residual) else self.sylvester_residual
            ),
        }


def mlp_ridge_scale(sbar_ss: np.ndarray) -> float:
    """Mean centered channel energy; multiply by the config factor."""
    k = max(sbar_ss.shape[0], 1)
    return float(np.trace(sbar_ss)) / k


def attn_ridge_scale(g_q: np.ndarray, g_k: np.ndarray) -> float:
    """Typical eigenvalue product of the Sylvester operator."""
    k = max(g_q.shape[0], 1)
    return float(np.trace(g_q)) * float(np.trace(g_k)) / (k * k)


def fit_mlp_affine(mu_s, mu_p, sigma_ss, sigma_ps, n: int, lam: float,
                   sigma_pp=None) -> AffineCompensation:
    """Centered ridge fit of x_P ~ B x_S + c from uncentered moments.

    mu_*, sigma_* are expectations over n calibration tokens; lam is the
    absolute ridge strength in the summed (X Xbar^T) system of the
    matrix-form normal equations.  When sigma_pp (= E[x_P x_P^T]) is
    supplied, calibration reconstruction errors are reported too.
    """
    mu_s = np.asarray(mu_s, dtype=np.float64).ravel()
    mu_p = np.asarray(mu_p, dtype=np.float64).ravel()
    sigma_ss = np.asarray(sigma_ss, dtype=np.float64)
    sigma_ps = np.asarray(sigma_ps, dtype=np.float64)
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}")
    if sigma_ss.shape != (mu_s.size, mu_s.size) or sigma_ps.shape != (mu_p.size, mu_s.size):
        raise ShapeMismatch("moment blocks do not match the partition sizes")

    sbar_ss = n * (sigma_ss - np.outer(mu_s, mu_s))
    sbar_ps = n * (sigma_ps - np.outer(mu_p, mu_s))
    b = solve_ridge(sbar_ss, sbar_ps, lam)
    c = mu_p - b @ mu_s

    comp = AffineCompensation(b_matrix=b, c=c, lam=float(lam))
    comp.cond = float(np.linalg.cond(sbar_ss + lam * np.eye(sbar_ss.shape[0])))
    if sigma_pp is not None:
        sigma_pp = np.asarray(sigma_pp, dtype=np.float64)
        s_pp = n * sigma_pp
        s_ss = n * sigma_ss
        s_sp = n * sigma_ps.T      # sum x_S x_P^T
        sum_s = n * mu_s
        sum_p = n * mu_p
        pre_sq = np.trace(s_pp)
        post_sq = (
            pre_sq
            - 2.0 * np.trace(b @ s_sp)
            - 2.0 * c @ sum_p
            + np.trace(b.T @ b @ s_ss)
            + 2.0 * c @ (b @ sum_s)
            + n * (c @ c)
        )
        mean_sq = pre_sq - n * (mu_p @ mu_p)
        comp.pre_err = math.sqrt(max(float(pre_sq), 0.0))
        comp.post_err = math.sqrt(max(float(post_sq), 0.0))
        comp.mean_err = math.sqrt(max(float(mean_sq), 0.0))
    return comp


def fold_mlp(w2, b2, partition: IndexPartition, comp: AffineCompensation):
    """Fold the affine prediction into the second MLP linear.

    w2 is (dim, hidden) acting on hidden activations from the right;
    returns (w2 kept columns + W_P B, b2 + W_P c) in the dtype of w2.
    """
    w2 = np.asarray(w2)
    b2 = np.asarray(b2)
    if w2.ndim != 2 or w2.shape[1] != partition.width:
        raise ShapeMismatch(
            f"w2 has {w2.shape[1] if w2.ndim == 2 else '?'} columns, "
            f"partition expects {partition.width}"
        )
    s = np.asarray(partition.kept, dtype=np.intp)
    p = np.asarray(partition.pruned, dtype=np.intp)
    if comp.b_matrix.shape != (p.size, s.size):
        raise ShapeMismatch("compensation shape does not match the partition")
    w_s = w2[:, s].astype(np.float64)
    w_p = w2[:, p].astype(np.float64)
    w_new = w_s + w_p @ comp.b_matrix
    b_new = b2.astype(np.float64) + w_p @ comp.c
    return w_new.astype(w2.dtype), b_new.astype(b2.dtype)


def fit_attn_logit(stats: AttnCalibStats, block: int, head: int,
                   partition: IndexPartition, lam: float) -> LogitCompensation:
    """Fit the logit correction M and its fold factors for one head."""
    if not lam > 0:
        raise NonPositiveLambda("attention compensation requires lambda > 0")
    g_q_full, g_k_full = stats.head(block, head)
    if g_q_full.shape[0] != partition.width:
        raise ShapeMismatch(
            f"partition width {partition.width} != head dim {g_q_full.shape[0]}"
        )
    s = np.asarray(partition.kept, dtype=np.intp)
    p = np.asarray(partition.pruned, dtype=np.intp)

    g_q = g_q_full[np.ix_(s, s)]
    g_k = g_k_full[np.ix_(s, s)]
    c_q = g_q_full[np.ix_(s, p)]      # Q_S^T Q_P
    c_k = g_k_full[np.ix_(p, s)]      # K_P^T K_S
    rhs = c_q @ c_k

    m = solve_sylvester_ridge(g_q, g_k, rhs, lam)
    raw = float(np.max(np.abs(g_q @ m @ g_k + lam * m - rhs))) if s.size else 0.0
    rhs_max = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    residual = raw / (1.0 + rhs_max)   # relative to the solve contract bound

    eye_m = np.eye(s.size) + m
    f = svd(eye_m)
    sigma = np.where(f.singular_values < 1e-12, 0.0, f.singular_values)
    root = np.sqrt(sigma)
    u = f.u * root
    v = f.v * root

    comp = LogitCompensation(m=m, u=u, v=v, lam=float(lam),
                             sylvester_residual=residual)
    pre_sq = float(np.trace(g_q_full[np.ix_(p, p)] @ g_k_full[np.ix_(p, p)]))
    cross = float(np.trace(m.T @ rhs))
    norm_sq = float(np.trace(m.T @ g_q @ m @ g_k))
    comp.pre_err = math.sqrt(max(pre_sq, 0.0))
    comp.post_err = math.sqrt(max(pre_sq - 2.0 * cross + norm_sq, 0.0))
    return comp


def fold_attn(w_q, b_q, w_k, b_k, partition: IndexPartition,
              comp: LogitCompensation):
    """Fold the logit correction into kept Q/K columns of one head.

    Returns (W_Q,S u, u^T b_Q,S, W_K,S v, v^T b_K,S) so the rotated
    projections satisfy Qhat_S = Q_S u and Khat_S = K_S v bias-included,
    hence Qhat_S Khat_S^T = Q_S (I + M) K_S^T on any input.
    """
    w_q = np.asarray(w_q)
    w_k = np.asarray(w_k)
    b_q = np.asarray(b_q)
    b_k = np.asarray(b_k)
    if w_q.ndim != 2 or w_q.shape[1] != partition.width or w_k.shape != w_q.shape:
        raise ShapeMismatch("Q/K projections do not match the partition width")
    s = np.asarray(partition.kept, dtype=np.intp)
    if comp.u.shape != (s.size, s.size):
        raise ShapeMismatch("compensation factors do not match the kept width")
    wq_new = w_q[:, s].astype(np.float64) @ comp.u
    wk_new = w_k[:, s].astype(np.float64) @ comp.v
    bq_new = comp.u.T @ b_q[s].astype(np.float64)
    bk_new = comp.v.T @ b_k[s].astype(np.float64)
    return (wq_new.astype(w_q.dtype), bq_new.astype(b_q.dtype),
            wk_new.astype(w_k.dtype), bk_new.astype(b_k.dtype))
