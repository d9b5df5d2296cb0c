"""Command-line interface for training, applying, and feature export.

Exit codes match the measurement tool: 0 on success, 1 when a computation
rejects its inputs, 2 for argument errors.
"""

import argparse
import json
import sys
from pathlib import Path

from .config import TrainConfig
from .features import export_pretrained_features
from .train import train
from .translate import apply_checkpoint


def cmd_train(args):
    cfg = TrainConfig(
        dataset_dir=args.dataset,
        out_dir=args.out,
        epochs=args.epochs,
        lr=args.lr,
        betas=(args.beta1, args.beta2),
        batch_size=args.batch_size,
        cycle_weight=args.cycle_weight,
        identity_weight=args.identity_weight,
        seed=args.seed,
        least_squares=args.least_squares,
        checkpoint_every=args.checkpoint_every,
        base_width=args.base_width,
        n_res_blocks=args.res_blocks,
    )
    result = train(cfg)
    print(json.dumps({
        "config": cfg.as_dict(),
        "checkpoint": str(result.checkpoint_path),
        "loss_log": str(result.log_path),
        "steps": len(result.records),
        "final_total": result.records[-1].total,
    }, indent=2))


def cmd_apply(args):
    written = apply_checkpoint(args.checkpoint, args.images, args.out)
    print(json.dumps({
        "checkpoint": str(args.checkpoint),
        "in_dir": str(args.images),
        "out_dir": str(args.out),
        "written": [p.name for p in written],
    }, indent=2))


def cmd_export_features(args):
    written = export_pretrained_features(
        args.images, args.dims, args.out, weights_path=args.weights)
    print(json.dumps({
        "in_dir": str(args.images),
        "out_dir": str(args.out),
        "files": {str(d): str(p) for d, p in sorted(written.items())},
    }, indent=2))


def _dims(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims list: {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gan-trainer",
        description="unpaired image translation for raster angiogram datasets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a translator pair on a dataset")
    p.add_argument("--dataset", required=True,
                   help="dataset root holding trainA/ and trainB/")
    p.add_argument("--out", required=True, help="run directory for logs and checkpoints")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--beta1", type=float, default=0.5)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--cycle-weight", type=float, default=10.0)
    p.add_argument("--identity-weight", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--least-squares", action="store_true",
                   help="least-squares adversarial loss instead of the log form")
    p.add_argument("--checkpoint-every", type=int, default=50)
    p.add_argument("--base-width", type=int, default=16)
    p.add_argument("--res-blocks", type=int, default=2)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("apply", help="translate a directory of raster images")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--images", required=True, help="directory of .raw inputs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("export-features",
                       help="write Inception v3 feature CSVs for a directory")
    p.add_argument("--images", required=True, help="directory of .raw inputs")
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=_dims, default=[2048],
                   help="comma-separated dims (64, 192, 768, 2048)")
    p.add_argument("--weights", default=None,
                   help="Inception v3 state-dict path (else "
                        "GAN_TRAINER_INCEPTION_WEIGHTS)")
    p.set_defaults(func=cmd_export_features)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except SystemExit:
        raise
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
