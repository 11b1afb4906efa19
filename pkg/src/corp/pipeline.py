"""End-to-end pruning pipeline.

One statistics pass over the calibration set, then per-block MLP
ranking + affine compensation, then per-(block, head) Q/K ranking +
logit compensation, all folded into the weights of a model copy.  No
labels and no gradients anywhere; ranking and fits are deterministic,
so a fixed input pair always yields byte-identical outputs.

Statistics are cached once from the unpruned model by default; with
recalibrate=True they are recollected from the partially pruned model
before every block (slower, sometimes slightly better at high joint
sparsity).
"""

import copy
import time

import numpy as np

from . import compensate as comp_mod
from .calib import collect_calibration, second_moments
from .errors import MissingLabels, NumericalError, ShapeMismatch
from .rank import (
    IndexPartition,
    partition_from_scores,
    rank_attn,
    rank_mlp_activation,
    rank_mlp_magnitude,
)
from .tensorfile import PruneConfig
from .vit import VitModel, final_representation, forward

SYLVESTER_RESIDUAL_LIMIT = 1e-7


class SiteFailure(NumericalError):
    """Numerical failure wrapped with the site where it happened."""

    def __init__(self, site: str, cause: Exception):
        super().__init__(f"{site}: {cause}")
        self.site = site
        self.cause = cause


def _full_partition(width: int) -> IndexPartition:
    return IndexPartition(kept=tuple(range(width)), pruned=(), width=width)


def _mlp_partition(config: PruneConfig, block, acc, override):
    if override is not None:
        return override
    if config.ranking == "magnitude":
        return rank_mlp_magnitude(block.w1, block.w2, config.mlp_sparsity)
    return rank_mlp_activation(acc, config.mlp_sparsity)


def _attn_partition(config: PruneConfig, block, stats, b, h, override):
    if override is not None:
        return override
    if config.ranking == "magnitude":
        sl = block.head_slices()[h]
        scores = (np.linalg.norm(block.wq[:, sl].astype(np.float64), axis=0)
                  * np.linalg.norm(block.wk[:, sl].astype(np.float64), axis=0))
        return partition_from_scores(scores, config.attn_sparsity)
    return rank_attn(stats, b, h, config.attn_sparsity)


def prune_model(model: VitModel, calib_images, config: PruneConfig,
                compensate: bool = True, recalibrate: bool = False,
                mlp_partitions=None, attn_partitions=None,
                lambda_mlp_abs: float = None, lambda_attn_abs: float = None):
    """Prune and compensate a copy of `model`.

    mlp_partitions / attn_partitions override the ranking when given
    (one IndexPartition per block, resp. per block a list per head).
    lambda_*_abs bypass the energy-relative ridge scaling with absolute
    regularizer strengths.

    Returns (pruned model, report dict).  On a numerical failure the
    report carries "aborted_at" and a SiteFailure is raised.
    """
    config.validate()
    model.validate_shapes()
    out = copy.deepcopy(model)
    report = {
        "config": config.to_dict(),
        "compensated": bool(compensate),
        "recalibrated": bool(recalibrate),
        "sites": [],
        "mlp_partitions": [],
        "attn_partitions": [],
        "aborted_at": None,
    }
    stages = {}

    t0 = time.perf_counter()
    mlp_accs = attn_stats = None
    if not recalibrate:
        mlp_accs, attn_stats = collect_calibration(out, calib_images, config.calib_batch)
    stages["statistics"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for b, blk in enumerate(out.blocks):
        site = f"block.{b}.mlp"
        try:
            if recalibrate:
                mlp_accs, _ = collect_calibration(out, calib_images, config.calib_batch)
            acc = mlp_accs[b]
            override = mlp_partitions[b] if mlp_partitions is not None else None
            part = _mlp_partition(config, blk, acc, override)
            report["mlp_partitions"].append(
                {"layer": site, "kept": list(part.kept), "pruned": list(part.pruned)}
            )
            s = np.asarray(part.kept, dtype=np.intp)
            p = np.asarray(part.pruned, dtype=np.intp)
            mu_s, mu_p, sig_ss, sig_ps = second_moments(acc, part)
            sig_pp = acc.second_moment()[np.ix_(p, p)]
            if compensate:
                sbar_ss = acc.n * (sig_ss - np.outer(mu_s, mu_s))
                lam = (lambda_mlp_abs if lambda_mlp_abs is not None
                       else config.lambda_mlp * comp_mod.mlp_ridge_scale(sbar_ss))
                lam = max(lam, 1e-30)
                fit = comp_mod.fit_mlp_affine(mu_s, mu_p, sig_ss, sig_ps, acc.n,
                                              lam, sigma_pp=sig_pp)
                blk.w2, blk.b2 = comp_mod.fold_mlp(blk.w2, blk.b2, part, fit)
                pre, post, cond, lam_used = fit.pre_err, fit.post_err, fit.cond, fit.lam
            else:
                blk.w2 = np.ascontiguousarray(blk.w2[:, s])
                pre = float(np.sqrt(max(acc.n * np.trace(sig_pp), 0.0)))
                post, cond, lam_used = pre, float("nan"), 0.0
            blk.w1 = np.ascontiguousarray(blk.w1[s, :])
            blk.b1 = np.ascontiguousarray(blk.b1[s])
            report["sites"].append(comp_mod.SiteReport(
                site=site, kind="mlp", kept=len(part.kept), pruned=len(part.pruned),
                lam=lam_used, pre_err=pre, post_err=post, cond=cond,
            ).to_dict())
        except NumericalError as exc:
            report["aborted_at"] = site
            raise SiteFailure(site, exc)
    stages["mlp"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for b, blk in enumerate(out.blocks):
        if recalibrate:
            _, attn_stats = collect_calibration(out, calib_images, config.calib_batch)
        new_wq, new_bq, new_wk, new_bk, new_kept = [], [], [], [], []
        for h, sl in enumerate(blk.head_slices()):
            site = f"block.{b}.attn.head.{h}"
            try:
                override = (attn_partitions[b][h]
                            if attn_partitions is not None else None)
                part = _attn_partition(config, blk, attn_stats, b, h, override)
                report["attn_partitions"].append(
                    {"layer": f"block.{b}.attn", "head": h,
                     "kept": list(part.kept), "pruned": list(part.pruned)}
                )
                s = np.asarray(part.kept, dtype=np.intp)
                wq_h, bq_h = blk.wq[:, sl], blk.bq[sl]
                wk_h, bk_h = blk.wk[:, sl], blk.bk[sl]
                if compensate:
                    g_q_full, g_k_full = attn_stats.head(b, h)
                    g_q = g_q_full[np.ix_(s, s)]
                    g_k = g_k_full[np.ix_(s, s)]
                    lam = (lambda_attn_abs if lambda_attn_abs is not None
                           else config.lambda_attn * comp_mod.attn_ridge_scale(g_q, g_k))
                    lam = max(lam, 1e-30)
                    fit = comp_mod.fit_attn_logit(attn_stats, b, h, part, lam)
                    if fit.sylvester_residual > SYLVESTER_RESIDUAL_LIMIT:
                        raise NumericalError(
                            f"sylvester residual {fit.sylvester_residual:.3e} "
                            f"exceeds {SYLVESTER_RESIDUAL_LIMIT:.0e}"
                        )
                    wq_n, bq_n, wk_n, bk_n = comp_mod.fold_attn(
                        wq_h, bq_h, wk_h, bk_h, part, fit)
                    pre, post = fit.pre_err, fit.post_err
                    resid, lam_used = fit.sylvester_residual, fit.lam
                else:
                    wq_n, bq_n = wq_h[:, s], bq_h[s]
                    wk_n, bk_n = wk_h[:, s], bk_h[s]
                    g_q_full, g_k_full = attn_stats.head(b, h)
                    p = np.asarray(part.pruned, dtype=np.intp)
                    pre_sq = float(np.trace(g_q_full[np.ix_(p, p)]
                                            @ g_k_full[np.ix_(p, p)]))
                    pre = float(np.sqrt(max(pre_sq, 0.0)))
                    post, resid, lam_used = pre, float("nan"), 0.0
                new_wq.append(wq_n)
                new_bq.append(bq_n)
                new_wk.append(wk_n)
                new_bk.append(bk_n)
                new_kept.append(len(part.kept))
                report["sites"].append(comp_mod.SiteReport(
                    site=site, kind="attn", kept=len(part.kept),
                    pruned=len(part.pruned), lam=lam_used,
                    pre_err=pre, post_err=post,
                    sylvester_residual=resid).to_dict())
            except NumericalError as exc:
                report["aborted_at"] = site
                raise SiteFailure(site, exc)
        blk.wq = np.ascontiguousarray(np.concatenate(new_wq, axis=1))
        blk.bq = np.ascontiguousarray(np.concatenate(new_bq))
        blk.wk = np.ascontiguousarray(np.concatenate(new_wk, axis=1))
        blk.bk = np.ascontiguousarray(np.concatenate(new_bk))
        blk.attn_kept = new_kept
    stages["attention"] = time.perf_counter() - t0

    report["stage_seconds"] = stages
    out.validate_shapes()
    return out, report


def evaluate(model: VitModel, images, labels, reference: VitModel = None,
             batch_size: int = 64) -> dict:
    """Top-1 / top-5 accuracy, plus mean representation distance if a
    reference model is supplied."""
    images = np.asarray(images)
    if labels is None:
        raise MissingLabels("evaluation requires labels")
    labels = np.asarray(labels).astype(np.int64).ravel()
    if labels.shape[0] != images.shape[0]:
        raise ShapeMismatch(
            f"{labels.shape[0]} labels for {images.shape[0]} images"
        )
    top1 = top5 = 0
    repr_dist = 0.0
    step = max(1, int(batch_size))
    for start in range(0, images.shape[0], step):
        chunk = images[start : start + step]
        lab = labels[start : start + step]
        logits, _ = forward(model, chunk)
        order = np.argsort(-logits, axis=1, kind="stable")
        top1 += int(np.count_nonzero(order[:, 0] == lab))
        top5 += int(np.count_nonzero((order[:, : min(5, logits.shape[1])]
                                      == lab[:, None]).any(axis=1)))
        if reference is not None:
            d = (final_representation(model, chunk)
                 - final_representation(reference, chunk))
            repr_dist += float(np.linalg.norm(d, axis=1).sum())
    n = images.shape[0]
    metrics = {"n": n, "top1": top1 / n, "top5": top5 / n}
    if reference is not None:
        metrics["mean_repr_error"] = repr_dist / n
    return metrics
