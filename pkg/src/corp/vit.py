"""Desk-scale pre-LN vision transformer with activation taps.

The model is a plain parameter container (float32 numpy arrays) plus a
deterministic forward pass that upcasts to float64 internally.  Blocks
follow the pre-LN order LN -> attention -> residual, LN -> MLP ->
residual; GELU uses the exact erf form.  Every prunable site can be
tapped during the forward pass: post-GELU MLP hidden activations and
per-head Q/K (bias included, before the softmax temperature).

Pruned models carry per-block kept widths: MLP hidden channels per
block, Q/K head dimensions per (block, head).  Value and output
projections always keep full width.  The softmax temperature stays tied
to the architectural head dim (config.head_dim) even after pruning, so
logit compensation that reconstructs full-width logits reproduces the
original attention exactly.

Patch extraction order, fixed for oracles: patches are row-major over
the (H/p, W/p) grid and each patch is flattened row-major over
(p, p, C).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import ShapeMismatch, UnknownPreset, ValidationError
from .tensorfile import read_tensorfile, write_tensorfile

LN_EPS = 1e-6

# cost of elementwise ops, in FLOPs per element (LN / softmax are
# "linear in elements"; the constants only matter at the ~0.5% level)
_LN_FLOPS = 5
_SOFTMAX_FLOPS = 5
_GELU_FLOPS = 8


@dataclass(frozen=True)
class VitConfig:
    image_size: int = 16
    patch_size: int = 4
    channels: int = 3
    dim: int = 32
    depth: int = 4
    heads: int = 4
    head_dim: int = 8
    mlp_hidden: int = 128
    num_classes: int = 10

    def __post_init__(self):
        if self.dim != self.heads * self.head_dim:
            raise ValidationError(
                f"dim {self.dim} != heads {self.heads} * head_dim {self.head_dim}"
            )
        if self.image_size % self.patch_size != 0:
            raise ValidationError(
                f"image_size {self.image_size} not divisible by patch_size {self.patch_size}"
            )
        for name in ("image_size", "patch_size", "channels", "dim", "heads",
                     "head_dim", "mlp_hidden", "num_classes"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.depth < 0:
            raise ValidationError("depth must be >= 0")

    @property
    def num_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2

    @property
    def tokens(self) -> int:
        return self.num_patches + 1

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    def to_dict(self) -> dict:
        return {
            "image_size": self.image_size,
            "patch_size": self.patch_size,
            "channels": self.channels,
            "dim": self.dim,
            "depth": self.depth,
            "heads": self.heads,
            "head_dim": self.head_dim,
            "mlp_hidden": self.mlp_hidden,
            "num_classes": self.num_classes,
        }


@dataclass
class Block:
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    wq: np.ndarray          # (dim, sum of kept head dims), heads concatenated
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray          # (dim, heads*head_dim), never pruned
    bv: np.ndarray
    wo: np.ndarray          # (heads*head_dim, dim)
    bo: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray
    w1: np.ndarray          # (mlp_kept, dim)
    b1: np.ndarray
    w2: np.ndarray          # (dim, mlp_kept)
    b2: np.ndarray
    attn_kept: list         # kept Q/K width per head

    @property
    def mlp_kept(self) -> int:
        return self.w1.shape[0]

    def head_slices(self):
        out = []
        start = 0
        for w in self.attn_kept:
            out.append(slice(start, start + w))
            start += w
        return out


@dataclass
class VitModel:
    config: VitConfig
    patch_w: np.ndarray     # (patch_dim, dim)
    patch_b: np.ndarray
    cls_token: np.ndarray   # (dim,)
    pos_embed: np.ndarray   # (tokens, dim)
    blocks: list
    final_ln_g: np.ndarray
    final_ln_b: np.ndarray
    head_w: np.ndarray      # (dim, num_classes)
    head_b: np.ndarray

    def kept_widths(self):
        return (
            [b.mlp_kept for b in self.blocks],
            [list(b.attn_kept) for b in self.blocks],
        )

    def validate_shapes(self) -> "VitModel":
        c = self.config
        if self.patch_w.shape != (c.patch_dim, c.dim):
            raise ShapeMismatch("patch_w shape mismatch")
        if self.pos_embed.shape != (c.tokens, c.dim):
            raise ShapeMismatch("pos_embed shape mismatch")
        if len(self.blocks) != c.depth:
            raise ShapeMismatch("block count != depth")
        full = c.heads * c.head_dim
        for i, b in enumerate(self.blocks):
            kq = sum(b.attn_kept)
            if len(b.attn_kept) != c.heads or any(
                not (1 <= w <= c.head_dim) for w in b.attn_kept
            ):
                raise ShapeMismatch(f"block {i}: bad per-head kept widths {b.attn_kept}")
            if b.wq.shape != (c.dim, kq) or b.wk.shape != (c.dim, kq):
                raise ShapeMismatch(f"block {i}: Q/K projection shape mismatch")
            if b.wv.shape != (c.dim, full) or b.wo.shape != (full, c.dim):
                raise ShapeMismatch(f"block {i}: V/O must keep full width")
            if b.w1.shape != (b.mlp_kept, c.dim) or b.w2.shape != (c.dim, b.mlp_kept):
                raise ShapeMismatch(f"block {i}: MLP shape mismatch")
        return self


@dataclass
class ActivationTrace:
    """Per-block calibration taps, rows are tokens (batch*tokens, width)."""

    mlp_acts: list = field(default_factory=list)       # (N*T, mlp_kept)
    q: list = field(default_factory=list)              # [block][head] (N*T, w)
    k: list = field(default_factory=list)
    logits: list = None                                # optional [block][head]


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = np.mean((x - mu) ** 2, axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + LN_EPS) * g + b


def _softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def patchify(config: VitConfig, images: np.ndarray) -> np.ndarray:
    n, h, w, c = images.shape
    p = config.patch_size
    g = h // p
    x = images.reshape(n, g, p, g, p, c)
    x = x.transpose(0, 1, 3, 2, 4, 5)
    return x.reshape(n, g * g, p * p * c)


def forward(model: VitModel, images, want_trace: bool = False,
            want_logits: bool = False):
    """Run the model on a batch of images.

    images: (N, H, W, C) float array.  Returns (logits, trace) where
    trace is None unless want_trace is set.  All math in float64.
    """
    c = model.config
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4 or images.shape[1:] != (c.image_size, c.image_size, c.channels):
        raise ShapeMismatch(
            f"expected images (N, {c.image_size}, {c.image_size}, {c.channels}), "
            f"got {images.shape}"
        )
    n = images.shape[0]
    trace = ActivationTrace(logits=[] if want_logits else None) if want_trace else None

    x = patchify(c, images) @ model.patch_w.astype(np.float64) + model.patch_b
    cls = np.broadcast_to(model.cls_token.astype(np.float64), (n, 1, c.dim))
    x = np.concatenate([cls, x], axis=1) + model.pos_embed.astype(np.float64)

    scale = 1.0 / math.sqrt(c.head_dim)
    for blk in model.blocks:
        h = layer_norm(x, blk.ln1_g.astype(np.float64), blk.ln1_b.astype(np.float64))
        q = h @ blk.wq.astype(np.float64) + blk.bq
        k = h @ blk.wk.astype(np.float64) + blk.bk
        v = h @ blk.wv.astype(np.float64) + blk.bv
        heads_out = []
        block_q, block_k, block_l = [], [], []
        for hi, sl in enumerate(blk.head_slices()):
            q_h, k_h = q[:, :, sl], k[:, :, sl]
            v_h = v[:, :, hi * c.head_dim : (hi + 1) * c.head_dim]
            logits = np.einsum("ntd,nsd->nts", q_h, k_h)
            attn = _softmax(logits * scale)
            heads_out.append(np.einsum("nts,nsd->ntd", attn, v_h))
            if trace is not None:
                block_q.append(q_h.reshape(-1, q_h.shape[-1]))
                block_k.append(k_h.reshape(-1, k_h.shape[-1]))
                if want_logits:
                    block_l.append(logits)
        attn_out = np.concatenate(heads_out, axis=-1) @ blk.wo.astype(np.float64) + blk.bo
        x = x + attn_out

        h = layer_norm(x, blk.ln2_g.astype(np.float64), blk.ln2_b.astype(np.float64))
        acts = gelu(h @ blk.w1.astype(np.float64).T + blk.b1)
        x = x + acts @ blk.w2.astype(np.float64).T + blk.b2

        if trace is not None:
            trace.mlp_acts.append(acts.reshape(-1, acts.shape[-1]))
            trace.q.append(block_q)
            trace.k.append(block_k)
            if want_logits:
                trace.logits.append(block_l)

    x = layer_norm(x, model.final_ln_g.astype(np.float64), model.final_ln_b.astype(np.float64))
    out = x[:, 0, :] @ model.head_w.astype(np.float64) + model.head_b
    return out, trace


def final_representation(model: VitModel, images) -> np.ndarray:
    """Final-LN class-token embedding, the input to the classifier head."""
    c = model.config
    images = np.asarray(images, dtype=np.float64)
    x = patchify(c, images) @ model.patch_w.astype(np.float64) + model.patch_b
    cls = np.broadcast_to(model.cls_token.astype(np.float64), (images.shape[0], 1, c.dim))
    x = np.concatenate([cls, x], axis=1) + model.pos_embed.astype(np.float64)
    scale = 1.0 / math.sqrt(c.head_dim)
    for blk in model.blocks:
        h = layer_norm(x, blk.ln1_g.astype(np.float64), blk.ln1_b.astype(np.float64))
        q = h @ blk.wq.astype(np.float64) + blk.bq
        k = h @ blk.wk.astype(np.float64) + blk.bk
        v = h @ blk.wv.astype(np.float64) + blk.bv
        outs = []
        for hi, sl in enumerate(blk.head_slices()):
            logits = np.einsum("ntd,nsd->nts", q[:, :, sl], k[:, :, sl])
            attn = _softmax(logits * scale)
            outs.append(np.einsum("nts,nsd->ntd", attn,
                                  v[:, :, hi * c.head_dim : (hi + 1) * c.head_dim]))
        x = x + np.concatenate(outs, axis=-1) @ blk.wo.astype(np.float64) + blk.bo
        h = layer_norm(x, blk.ln2_g.astype(np.float64), blk.ln2_b.astype(np.float64))
        x = x + gelu(h @ blk.w1.astype(np.float64).T + blk.b1) @ blk.w2.astype(np.float64).T + blk.b2
    x = layer_norm(x, model.final_ln_g.astype(np.float64), model.final_ln_b.astype(np.float64))
    return x[:, 0, :]


# ---------------------------------------------------------------------------
# parameter / FLOPs accounting

def _widths(config: VitConfig, kept=None):
    if kept is None:
        mlp = [config.mlp_hidden] * config.depth
        attn = [[config.head_dim] * config.heads for _ in range(config.depth)]
        return mlp, attn
    mlp, attn = kept
    if len(mlp) != config.depth or len(attn) != config.depth:
        raise ValidationError("kept widths must list every block")
    for m, heads in zip(mlp, attn):
        if not (1 <= m <= config.mlp_hidden) or len(heads) != config.heads or any(
            not (1 <= w <= config.head_dim) for w in heads
        ):
            raise ValidationError("kept widths out of range")
    return mlp, attn


def count_params(config: VitConfig, kept=None) -> int:
    """Exact parameter count, embeddings / LN scales / biases included."""
    mlp, attn = _widths(config, kept)
    d = config.dim
    full = config.heads * config.head_dim
    total = config.patch_dim * d + d          # patch embedding
    total += d                                # class token
    total += config.tokens * d                # positional embedding
    for m, heads in zip(mlp, attn):
        kq = sum(heads)
        total += 2 * d                        # ln1
        total += 2 * (d * kq + kq)            # Q, K kept columns
        total += d * full + full              # V
        total += full * d + d                 # O
        total += 2 * d                        # ln2
        total += m * d + m                    # W1, b1
        total += d * m + d                    # W2, b2
    total += 2 * d                            # final LN
    total += d * config.num_classes + config.num_classes
    return total


def count_flops(config: VitConfig, kept=None) -> int:
    """FLOPs (2 * MACs) of one forward pass at the config resolution.

    Covers patch embedding, Q/K/V/O projections, Q K^T logits at kept
    head widths, attention-times-V, both MLP linears and the classifier
    head; LayerNorm, softmax and GELU are counted linearly in elements.
    """
    mlp, attn = _widths(config, kept)
    d = config.dim
    full = config.heads * config.head_dim
    t = config.tokens
    flops = 2 * config.num_patches * config.patch_dim * d
    for m, heads in zip(mlp, attn):
        kq = sum(heads)
        flops += 2 * 2 * t * d * kq                       # Q and K projections
        flops += 2 * t * d * full + 2 * t * full * d      # V and O
        flops += 2 * t * t * kq                           # Q K^T per head, summed
        flops += 2 * t * t * full                         # attention * V
        flops += _SOFTMAX_FLOPS * config.heads * t * t
        flops += 2 * _LN_FLOPS * t * d
        flops += 2 * 2 * t * d * m                        # W1 and W2
        flops += _GELU_FLOPS * t * m
    flops += _LN_FLOPS * t * d
    flops += 2 * d * config.num_classes                   # head on the class token
    return flops


def joint_sparsity_widths(config: VitConfig, sparsity: float):
    """Kept widths for a joint sparsity level in the efficiency-table sense.

    There, "sparsity s" is the fraction of encoder (block) parameter
    mass removed.  Only MLP hidden units and Q/K columns are prunable
    (Value/output projections and LayerNorms are not), so the per-axis
    prune fraction is s scaled by the block-to-prunable parameter ratio,
    roughly 1.2 for the standard mlp_ratio-4 layouts.  Kept counts are
    ceil((1 - u) * width), at least 1.
    """
    if not (0.0 <= sparsity < 1.0):
        raise ValidationError(f"sparsity must be in [0, 1), got {sparsity}")
    d = config.dim
    full = config.heads * config.head_dim
    block = (4 * d + 2 * (d * full + full) + (d * full + full) + (full * d + d)
             + config.mlp_hidden * (d + 1) + d * config.mlp_hidden + d)
    prunable = config.mlp_hidden * (2 * d + 1) + 2 * full * (d + 1)
    u = min(sparsity * block / prunable, 1.0)
    mlp_keep = max(1, math.ceil((1.0 - u) * config.mlp_hidden))
    dh_keep = max(1, math.ceil((1.0 - u) * config.head_dim))
    mlp = [mlp_keep] * config.depth
    attn = [[dh_keep] * config.heads for _ in range(config.depth)]
    return mlp, attn


# ---------------------------------------------------------------------------
# synthesis

def _gen(seed: int, stream: int) -> np.random.Generator:
    # counter-based generator; every consumer gets its own key stream
    return np.random.Generator(np.random.Philox(key=np.array(
        [np.uint64(seed), np.uint64(stream)], dtype=np.uint64)))


def synthesize_model(config: VitConfig, seed: int, rank_fraction: float = 0.25,
                     sparsity_level: float = 0.1) -> VitModel:
    """Deterministically generate a model with planted redundancy.

    MLP first-layer rows are drawn from a rank-limited subspace mixture
    (rank ceil(rank_fraction * hidden), capped at dim) with log-normal
    per-channel gains, and the hidden bias is shifted positive so the
    GELU operates mostly in its near-linear region; both make hidden
    activations compressible and pruned channels predictable from kept
    ones.  Q/K projections (bias included) are drawn from a
    rank-limited column space per head.  sparsity_level sets the
    fraction of hidden channels given near-zero input rows, mimicking
    rarely active channels.
    """
    if not (0.0 < rank_fraction <= 1.0):
        raise ValidationError("rank_fraction must be in (0, 1]")
    c = config
    f32 = lambda a: np.asarray(a, dtype=np.float32)

    g = _gen(seed, 0)
    patch_w = g.normal(0.0, 1.0 / math.sqrt(c.patch_dim), (c.patch_dim, c.dim))
    cls_token = 0.1 * g.normal(size=c.dim)
    pos_embed = 0.1 * g.normal(size=(c.tokens, c.dim))

    r_attn = max(1, min(int(math.ceil(rank_fraction * c.head_dim)), c.head_dim))
    r_mlp = max(1, min(int(math.ceil(rank_fraction * c.mlp_hidden)), c.dim, c.mlp_hidden))
    qk_gain = math.sqrt(2.5 / r_attn)

    blocks = []
    for i in range(c.depth):
        g = _gen(seed, 1 + i)
        wq_heads, bq_heads, wk_heads, bk_heads = [], [], [], []
        for _ in range(c.heads):
            fq = g.normal(0.0, 1.0 / math.sqrt(c.dim), (c.dim, r_attn))
            gq = g.normal(0.0, qk_gain, (r_attn, c.head_dim))
            wq_heads.append(fq @ gq)
            bq_heads.append(0.2 * g.normal(size=r_attn) @ gq)
            fk = g.normal(0.0, 1.0 / math.sqrt(c.dim), (c.dim, r_attn))
            gk = g.normal(0.0, qk_gain, (r_attn, c.head_dim))
            wk_heads.append(fk @ gk)
            bk_heads.append(0.2 * g.normal(size=r_attn) @ gk)
        full = c.heads * c.head_dim
        wv = g.normal(0.0, 1.0 / math.sqrt(c.dim), (c.dim, full))
        wo = 0.5 * g.normal(0.0, 1.0 / math.sqrt(full), (full, c.dim))

        basis = np.linalg.qr(g.normal(size=(c.dim, r_mlp)))[0].T   # (r_mlp, dim)
        gains = np.exp(0.3 * g.normal(size=c.mlp_hidden))
        b1 = 1.3 + 0.25 * g.normal(size=c.mlp_hidden)
        n_quiet = int(sparsity_level * c.mlp_hidden)
        if n_quiet:
            # rarely active channels: tiny input rows, bias deep in the
            # flat negative tail of GELU so |activation| stays ~1e-4
            quiet = g.choice(c.mlp_hidden, size=n_quiet, replace=False)
            gains[quiet] *= 0.05
            b1[quiet] = -4.0 - np.abs(0.2 * g.normal(size=n_quiet))
        coeff = g.normal(size=(c.mlp_hidden, r_mlp))
        coeff /= np.linalg.norm(coeff, axis=1, keepdims=True)
        w1 = (gains[:, None] * coeff) @ basis
        w2 = g.normal(0.0, 0.5 / math.sqrt(c.mlp_hidden), (c.dim, c.mlp_hidden))

        blocks.append(Block(
            ln1_g=f32(np.ones(c.dim)), ln1_b=f32(np.zeros(c.dim)),
            wq=f32(np.concatenate(wq_heads, axis=1)), bq=f32(np.concatenate(bq_heads)),
            wk=f32(np.concatenate(wk_heads, axis=1)), bk=f32(np.concatenate(bk_heads)),
            wv=f32(wv), bv=f32(np.zeros(full)),
            wo=f32(wo), bo=f32(np.zeros(c.dim)),
            ln2_g=f32(np.ones(c.dim)), ln2_b=f32(np.zeros(c.dim)),
            w1=f32(w1), b1=f32(b1), w2=f32(w2), b2=f32(np.zeros(c.dim)),
            attn_kept=[c.head_dim] * c.heads,
        ))

    g = _gen(seed, 1_000_000)
    head_w = g.normal(0.0, 2.0 / math.sqrt(c.dim), (c.dim, c.num_classes))
    return VitModel(
        config=c,
        patch_w=f32(patch_w), patch_b=f32(np.zeros(c.dim)),
        cls_token=f32(cls_token), pos_embed=f32(pos_embed),
        blocks=blocks,
        final_ln_g=f32(np.ones(c.dim)), final_ln_b=f32(np.zeros(c.dim)),
        head_w=f32(head_w), head_b=f32(np.zeros(c.num_classes)),
    ).validate_shapes()


# ---------------------------------------------------------------------------
# serialization

def save_model(path, model: VitModel) -> None:
    """One tensor container plus a JSON sidecar (config and kept widths)."""
    entries = {
        "patch_embed.w": model.patch_w,
        "patch_embed.b": model.patch_b,
        "cls_token": model.cls_token,
        "pos_embed": model.pos_embed,
        "final_ln.g": model.final_ln_g,
        "final_ln.b": model.final_ln_b,
        "head.w": model.head_w,
        "head.b": model.head_b,
    }
    for i, b in enumerate(model.blocks):
        p = f"block.{i}"
        entries.update({
            f"{p}.ln1.g": b.ln1_g, f"{p}.ln1.b": b.ln1_b,
            f"{p}.attn.wq": b.wq, f"{p}.attn.bq": b.bq,
            f"{p}.attn.wk": b.wk, f"{p}.attn.bk": b.bk,
            f"{p}.attn.wv": b.wv, f"{p}.attn.bv": b.bv,
            f"{p}.attn.wo": b.wo, f"{p}.attn.bo": b.bo,
            f"{p}.ln2.g": b.ln2_g, f"{p}.ln2.b": b.ln2_b,
            f"{p}.mlp.w1": b.w1, f"{p}.mlp.b1": b.b1,
            f"{p}.mlp.w2": b.w2, f"{p}.mlp.b2": b.b2,
        })
    write_tensorfile(path, entries)
    mlp_kept, attn_kept = model.kept_widths()
    sidecar = {
        "config": model.config.to_dict(),
        "mlp_kept": mlp_kept,
        "attn_kept": attn_kept,
    }
    with open(f"{path}.json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def load_model(path) -> VitModel:
    tf = read_tensorfile(path)
    with open(f"{path}.json", "r", encoding="utf-8") as f:
        sidecar = json.load(f)
    config = VitConfig(**sidecar["config"])
    blocks = []
    for i in range(config.depth):
        p = f"block.{i}"
        blocks.append(Block(
            ln1_g=tf[f"{p}.ln1.g"], ln1_b=tf[f"{p}.ln1.b"],
            wq=tf[f"{p}.attn.wq"], bq=tf[f"{p}.attn.bq"],
            wk=tf[f"{p}.attn.wk"], bk=tf[f"{p}.attn.bk"],
            wv=tf[f"{p}.attn.wv"], bv=tf[f"{p}.attn.bv"],
            wo=tf[f"{p}.attn.wo"], bo=tf[f"{p}.attn.bo"],
            ln2_g=tf[f"{p}.ln2.g"], ln2_b=tf[f"{p}.ln2.b"],
            w1=tf[f"{p}.mlp.w1"], b1=tf[f"{p}.mlp.b1"],
            w2=tf[f"{p}.mlp.w2"], b2=tf[f"{p}.mlp.b2"],
            attn_kept=list(sidecar["attn_kept"][i]),
        ))
    return VitModel(
        config=config,
        patch_w=tf["patch_embed.w"], patch_b=tf["patch_embed.b"],
        cls_token=tf["cls_token"], pos_embed=tf["pos_embed"],
        blocks=blocks,
        final_ln_g=tf["final_ln.g"], final_ln_b=tf["final_ln.b"],
        head_w=tf["head.w"], head_b=tf["head.b"],
    ).validate_shapes()


# ---------------------------------------------------------------------------
# presets

PRESETS = {
    "toy": VitConfig(),
    "deit_tiny": VitConfig(image_size=224, patch_size=16, channels=3, dim=192,
                           depth=12, heads=3, head_dim=64, mlp_hidden=768,
                           num_classes=1000),
    "deit_small": VitConfig(image_size=224, patch_size=16, channels=3, dim=384,
                            depth=12, heads=6, head_dim=64, mlp_hidden=1536,
                            num_classes=1000),
    "deit_base": VitConfig(image_size=224, patch_size=16, channels=3, dim=768,
                           depth=12, heads=12, head_dim=64, mlp_hidden=3072,
                           num_classes=1000),
    "deit_large": VitConfig(image_size=224, patch_size=16, channels=3, dim=1024,
                            depth=24, heads=16, head_dim=64, mlp_hidden=4096,
                            num_classes=1000),
    "deit_huge": VitConfig(image_size=224, patch_size=14, channels=3, dim=1280,
                           depth=32, heads=16, head_dim=80, mlp_hidden=5120,
                           num_classes=1000),
}


def preset(name: str) -> VitConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
