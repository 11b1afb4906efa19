"""Command-line interface: gen, analyze, prune, eval, flops.

Exit codes: 0 success, 2 validation error (bad files, shapes, flags),
3 numerical failure (the offending site is named on stderr).  Verbosity
comes from the CORP_LOG environment variable (error, info, debug).
Reports are UTF-8 JSON; the prune report is byte-reproducible for a
fixed seed and input, wall-clock timings go to a separate manifest.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .analyze import DEFAULT_TAU, build_report
from .errors import (
    MissingLabels,
    NumericalError,
    UnknownPreset,
    ValidationError,
)
from .pipeline import SiteFailure, evaluate, prune_model
from .tensorfile import (
    PruneConfig,
    load_config,
    read_tensorfile,
    write_json,
    write_tensorfile,
)
from .vit import (
    VitConfig,
    count_flops,
    count_params,
    forward,
    joint_sparsity_widths,
    load_model,
    preset,
    save_model,
    synthesize_model,
)

log = logging.getLogger("corp")


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("CORP_LOG", "error"), logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="corp %(levelname)s: %(message)s")


def _gen_images(seed: int, stream: int, n: int, config: VitConfig) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [np.uint64(seed), np.uint64(stream)], dtype=np.uint64)))
    shape = (n, config.image_size, config.image_size, config.channels)
    return rng.normal(size=shape).astype(np.float32)


def _load_images(path, need_labels=False):
    tf = read_tensorfile(path)
    if "images" not in tf:
        raise ValidationError(f"{path}: no 'images' tensor")
    images = tf["images"]
    if images.ndim != 4:
        raise ValidationError(f"{path}: images must be 4-D, got {images.shape}")
    labels = tf["labels"] if "labels" in tf else None
    if need_labels and labels is None:
        raise MissingLabels(f"{path}: no 'labels' tensor")
    return images, labels


def cmd_gen(args) -> int:
    config = preset(args.preset)
    os.makedirs(args.out, exist_ok=True)
    model = synthesize_model(config, args.seed, rank_fraction=args.rank_fraction,
                             sparsity_level=args.sparsity_level)
    model_path = os.path.join(args.out, "model.ctf")
    save_model(model_path, model)

    calib = _gen_images(args.seed, 2_000_000, args.calib_n, config)
    write_tensorfile(os.path.join(args.out, "calib.ctf"), {"images": calib})

    eval_images = _gen_images(args.seed, 2_000_001, args.eval_n, config)
    logits, _ = forward(model, eval_images)
    labels = np.argmax(logits, axis=1).astype(np.float32)
    write_tensorfile(os.path.join(args.out, "eval.ctf"),
                     {"images": eval_images, "labels": labels})
    log.info("wrote model/calib/eval fixtures to %s", args.out)
    print(f"generated {model_path} calib.ctf eval.ctf (seed {args.seed})")
    return 0


def _prune_config(args) -> PruneConfig:
    config = load_config(args.config) if args.config else PruneConfig()
    if args.mlp_sparsity is not None:
        config.mlp_sparsity = args.mlp_sparsity
    if args.attn_sparsity is not None:
        config.attn_sparsity = args.attn_sparsity
    if args.lambda_mlp is not None:
        config.lambda_mlp = args.lambda_mlp
    if args.lambda_attn is not None:
        config.lambda_attn = args.lambda_attn
    if args.ranking is not None:
        config.ranking = args.ranking
    if args.seed is not None:
        config.seed = args.seed
    return config.validate()


def cmd_prune(args) -> int:
    config = _prune_config(args)
    model = load_model(args.model)
    calib, _ = _load_images(args.calib)
    report_path = args.report or f"{args.out}.report.json"
    try:
        pruned, report = prune_model(
            model, calib, config,
            compensate=not args.no_compensate,
            recalibrate=args.recalibrate,
        )
    except SiteFailure as exc:
        write_json(report_path, {
            "config": config.to_dict(),
            "sites": [],
            "aborted_at": exc.site,
            "error": str(exc.cause),
        })
        raise
    stages = report.pop("stage_seconds", {})
    save_model(args.out, pruned)
    write_json(report_path, report)
    manifest = {
        "tool": "corp",
        "version": __version__,
        "seed": config.seed,
        "threads": args.threads,
        "config": config.to_dict(),
        "inputs": {"model": args.model, "calib": args.calib},
        "outputs": {"model": args.out, "report": report_path},
        "stage_seconds": stages,
    }
    write_json(f"{report_path}.manifest.json", manifest)
    mlp_kept, attn_kept = pruned.kept_widths()
    print(f"pruned model -> {args.out} (mlp kept {mlp_kept}, "
          f"attn kept {[k[0] for k in attn_kept]} per head), report -> {report_path}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    images, labels = _load_images(args.data, need_labels=True)
    reference = load_model(args.reference) if args.reference else None
    metrics = evaluate(model, images, labels, reference=reference)
    if args.out:
        write_json(args.out, metrics)
    print(f"top1 {metrics['top1'] * 100:.2f}%  top5 {metrics['top5'] * 100:.2f}%"
          + (f"  mean_repr_error {metrics['mean_repr_error']:.6f}"
             if "mean_repr_error" in metrics else ""))
    return 0


def cmd_flops(args) -> int:
    if args.arch:
        import json
        with open(args.arch, "r", encoding="utf-8") as f:
            config = VitConfig(**json.load(f))
    else:
        config = preset(args.preset)
    base_p = count_params(config)
    base_f = count_flops(config)
    rows = []
    print(f"{'sparsity':>8} {'params(M)':>10} {'flops(G)':>9} "
          f"{'param_red%':>10} {'flops_red%':>10}")
    for s in args.sparsities:
        kept = joint_sparsity_widths(config, s) if s > 0 else None
        p = count_params(config, kept)
        f = count_flops(config, kept)
        rows.append({
            "sparsity": s,
            "params": p,
            "flops": f,
            "param_reduction_pct": 100.0 * (1 - p / base_p),
            "flops_reduction_pct": 100.0 * (1 - f / base_f),
            "mlp_keep": kept[0][0] if kept else config.mlp_hidden,
            "head_dim_keep": kept[1][0][0] if kept else config.head_dim,
        })
        print(f"{s:>8.2f} {p / 1e6:>10.1f} {f / 1e9:>9.2f} "
              f"{rows[-1]['param_reduction_pct']:>10.1f} "
              f"{rows[-1]['flops_reduction_pct']:>10.1f}")
    payload = {
        "preset": args.preset if not args.arch else None,
        "config": config.to_dict(),
        "baseline": {"params": base_p, "flops": base_f},
        "rows": rows,
    }
    if args.out:
        write_json(args.out, payload)
    return 0


def cmd_analyze(args) -> int:
    model = load_model(args.model)
    images, _ = _load_images(args.calib)
    report = build_report(model, images, tau=args.tau)
    if args.out:
        write_json(args.out, report)
    print(f"{'tap':>18} {'dim':>5} {'eff_rank':>9} {'ratio':>6} "
          f"{'k95':>5} {'k95_ratio':>9} {'sparsity':>8}")
    for tap in report["taps"]:
        print(f"{tap['name']:>18} {tap['dim']:>5} {tap['eff_rank']:>9.1f} "
              f"{tap['rank_ratio']:>6.3f} {tap['k95']:>5} "
              f"{tap['k95_ratio']:>9.3f} {tap['act_sparsity']:>8.3f}")
    print(f"params {report['params']}  flops {report['flops']}")
    return 0


def _sparsity_list(text: str):
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sparsity list {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corp",
        description="one-shot structured pruning with closed-form compensation",
    )
    parser.add_argument("--version", action="version", version=f"corp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a toy model + calibration/eval fixtures")
    p.add_argument("--preset", default="toy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--rank-fraction", type=float, default=0.25)
    p.add_argument("--sparsity-level", type=float, default=0.3)
    p.add_argument("--calib-n", type=int, default=512)
    p.add_argument("--eval-n", type=int, default=256)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("prune", help="prune + compensate a model")
    p.add_argument("--model", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--config", help="PruneConfig JSON; flags override fields")
    p.add_argument("--mlp-sparsity", type=float)
    p.add_argument("--attn-sparsity", type=float)
    p.add_argument("--lambda-mlp", type=float)
    p.add_argument("--lambda-attn", type=float)
    p.add_argument("--ranking", choices=["activation", "magnitude"])
    p.add_argument("--recalibrate", action="store_true")
    p.add_argument("--no-compensate", action="store_true",
                   help="prune without compensation (ablation baseline)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("eval", help="top-1/top-5 accuracy on a labeled file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--reference", help="unpruned model for representation error")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("flops", help="parameter/FLOPs reduction table")
    p.add_argument("--preset", default="deit_base")
    p.add_argument("--arch", help="VitConfig JSON file instead of a preset")
    p.add_argument("--sparsities", type=_sparsity_list,
                   default=[0.0, 0.25, 0.50, 0.63, 0.69, 0.75])
    p.add_argument("--out")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("analyze", help="redundancy metrics per MLP tap")
    p.add_argument("--model", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SiteFailure as exc:
        print(f"corp: numerical failure at {exc.site}: {exc.cause}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"corp: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, UnknownPreset, MissingLabels) as exc:
        print(f"corp: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"corp: io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
