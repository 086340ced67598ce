"""Command line for training, exporting, and adversarial fine-tuning."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import ExportError
from .exporter import PARITY_BUDGET, export_bundle
from .finetune import finetune_on_adversarial
from .training import CLASSIFIER_FILE, MLM_FILE, train_tiny_world
from .world import probe_sentences


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlmexport",
        description="Produce and fine-tune the model bundles the attack engine consumes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser(
        "train-tiny", help="train the starter checkpoint pair and its corpora"
    )
    train.add_argument("--out", type=Path, required=True, help="checkpoint directory")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--corpus-size", type=int, default=400)
    train.add_argument("--classifier-steps", type=int, default=300)
    train.add_argument("--mlm-steps", type=int, default=500)

    export = commands.add_parser(
        "export-bundle", help="export a checkpoint pair as an engine-loadable bundle"
    )
    export.add_argument("--classifier", type=Path, required=True, help="classifier checkpoint")
    export.add_argument("--mlm", type=Path, required=True, help="masked-LM checkpoint")
    export.add_argument("--out", type=Path, required=True, help="bundle directory")
    export.add_argument(
        "--probes",
        type=Path,
        default=None,
        help="file with one probe sentence per line (default: 32 built-in probes)",
    )
    export.add_argument(
        "--n-probes",
        type=int,
        default=32,
        help="number of built-in probes; 0 skips parity and marks the bundle unverified",
    )
    export.add_argument("--parity-budget", type=float, default=PARITY_BUDGET)

    finetune = commands.add_parser(
        "finetune-adv",
        help="fine-tune a classifier on an engine-exported adversarial corpus",
    )
    finetune.add_argument("--classifier", type=Path, required=True, help="base checkpoint")
    finetune.add_argument("--augmented", type=Path, required=True, help="augmented JSONL")
    finetune.add_argument("--out", type=Path, required=True, help="fine-tuned checkpoint")
    finetune.add_argument(
        "--bundle-out",
        type=Path,
        default=None,
        help="also export the result as a bundle (pairs it with --mlm)",
    )
    finetune.add_argument(
        "--mlm", type=Path, default=None, help="MLM checkpoint for --bundle-out"
    )
    finetune.add_argument("--steps", type=int, default=300)
    finetune.add_argument("--lr", type=float, default=1e-3)
    finetune.add_argument("--seed", type=int, default=0)
    finetune.add_argument("--probes", type=Path, default=None, help=argparse.SUPPRESS)
    finetune.add_argument("--n-probes", type=int, default=32, help=argparse.SUPPRESS)
    return parser


def _load_probes(args) -> list[str]:
    if args.probes is not None:
        lines = args.probes.read_text(encoding="utf-8").splitlines()
        return [line.strip() for line in lines if line.strip()]
    return probe_sentences(args.n_probes)


def _cmd_train(args) -> int:
    paths = train_tiny_world(
        args.out,
        seed=args.seed,
        corpus_size=args.corpus_size,
        classifier_steps=args.classifier_steps,
        mlm_steps=args.mlm_steps,
    )
    for role, path in paths.items():
        print(f"{role}: {path}")
    return 0


def _cmd_export(args) -> int:
    manifest = export_bundle(
        args.classifier,
        args.mlm,
        args.out,
        _load_probes(args),
        parity_budget=args.parity_budget,
    )
    parity = manifest.parity
    if parity.verified:
        print(
            f"exported {args.out}: parity max |logit diff| "
            f"{parity.max_abs_logit_diff:.3e} over {parity.n_probes} probes"
        )
    else:
        print(f"exported {args.out}: parity unverified (no probes)")
    return 0


def _cmd_finetune(args) -> int:
    if args.bundle_out is not None and args.mlm is None:
        raise ExportError("--bundle-out needs --mlm to pair with the classifier")
    corpus = finetune_on_adversarial(
        args.classifier,
        args.augmented,
        args.out,
        steps=args.steps,
        lr=args.lr,
        seed=args.seed,
    )
    print(
        f"fine-tuned on {corpus.n_original} original + "
        f"{corpus.n_adversarial} adversarial rows -> {args.out}"
    )
    if args.bundle_out is not None:
        manifest = export_bundle(args.out, args.mlm, args.bundle_out, _load_probes(args))
        print(f"bundle: {args.bundle_out} (parity {manifest.parity.status})")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "train-tiny": _cmd_train,
        "export-bundle": _cmd_export,
        "finetune-adv": _cmd_finetune,
    }
    try:
        return handlers[args.command](args)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
