"""One-shot structured pruning of small vision transformers with
closed-form ridge/Sylvester compensation folded into the weights."""

__version__ = "0.1.0"

from .analyze import activation_sparsity, build_report, effective_rank, k95
from .calib import (
    AttnCalibStats,
    MomentAccumulator,
    collect_attn_stats,
    collect_calibration,
    second_moments,
)
from .compensate import (
    AffineCompensation,
    LogitCompensation,
    fit_attn_logit,
    fit_mlp_affine,
    fold_attn,
    fold_mlp,
)
from .linalg import Svd, SymEig, solve_ridge, solve_sylvester_ridge, svd, sym_eig
from .pipeline import evaluate, prune_model
from .rank import (
    IndexPartition,
    partition_from_scores,
    rank_attn,
    rank_mlp_activation,
    rank_mlp_magnitude,
)
from .tensorfile import (
    PruneConfig,
    TensorFile,
    load_config,
    read_tensorfile,
    save_config,
    write_tensorfile,
)
from .vit import (
    VitConfig,
    VitModel,
    count_flops,
    count_params,
    forward,
    joint_sparsity_widths,
    load_model,
    preset,
    save_model,
    synthesize_model,
)
