"""Command-line entry point.

Config precedence is flags over config file over defaults; the resolved
values are echoed into the run manifest so two runs can be compared by
their manifests alone.  Timing lands in timings.jsonl; summary.json and
samples.jsonl are byte-reproducible for a fixed seed, config and bundle.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .backends import HashedBowEmbedding, bundle_checksums, load_bundle
from .backends.remote import RemoteEmbedding, RemoteMlm, RemoteService, remote_gateway
from .backends.torchscript import TorchscriptMlm
from .config import attack_config_from_dict
from .engine import AttackConfig, attack
from .errors import ConfigError, MlmAttackError
from .evaluation import (
    AblationDimension,
    EvaluationResult,
    ablate,
    evaluate,
    export_adversarial_training_set,
    read_records,
    record_for,
    transfer_evaluate,
)
from .gateway import LabelMap, ModelGateway
from .importance import RankingMode
from .samples import TextSample, load_corpus, write_jsonl

log = logging.getLogger("mlmattack")


def _setup_logging() -> None:
    level = os.environ.get("MLMATTACK_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _is_url(value: str) -> bool:
    return value.startswith("http://") or value.startswith("https://")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _build_similarity(spec: str):
    if spec == "bow":
        return HashedBowEmbedding()
    if spec == "off":
        return None
    if _is_url(spec):
        return RemoteEmbedding(RemoteService(spec))
    raise ConfigError(f"--similarity must be 'bow', 'off' or an http(s) URL, got {spec!r}")


def build_gateway(
    target: str, mlm: str | None, similarity: str, need_mlm: bool = True
) -> ModelGateway:
    """Resolve --target/--mlm/--similarity values into one gateway."""
    sim_backend = _build_similarity(similarity)
    if _is_url(target):
        gateway = remote_gateway(target, similarity=sim_backend)
    else:
        gateway = load_bundle(target, similarity=sim_backend)

    if mlm is not None and mlm != target:
        if _is_url(mlm):
            service = RemoteService(mlm)
            meta = service.get_json("/meta")
            if not meta.get("has_mlm"):
                raise ConfigError(f"{mlm} does not serve a masked LM")
            mlm_backend = RemoteMlm(service, meta.get("max_positions"))
        else:
            root = Path(mlm)
            meta = json.loads((root / "bundle.json").read_text(encoding="utf-8"))
            from .tokenization import Vocabulary

            vocab = Vocabulary.load(root / "vocab.txt", cased=bool(meta["cased"]))
            if vocab.sha256 != gateway.vocab.sha256:
                raise ConfigError(
                    "--mlm bundle vocabulary differs from the target's; "
                    "candidate token ids would not line up"
                )
            mlm_backend = TorchscriptMlm(root / "mlm.pt", vocab, int(meta["max_positions"]))
        gateway = ModelGateway(
            gateway.classifier,
            mlm_backend,
            gateway.label_map,
            gateway.vocab,
            similarity=gateway.similarity,
            logit_kind=gateway.logit_kind,
        )
    if need_mlm and gateway.mlm is None:
        raise ConfigError("no masked LM available; pass --mlm or a bundle with mlm.pt")
    return gateway


def _load_config(args: argparse.Namespace) -> AttackConfig:
    base = AttackConfig()
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config} must hold a JSON object")
        base = attack_config_from_dict(data, base=base)
    overrides: dict = {}
    if args.k is not None:
        overrides["k"] = args.k
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    if args.ranking is not None:
        overrides["ranking_mode"] = args.ranking
    if args.sim_threshold is not None:
        overrides["sim_threshold"] = args.sim_threshold
    if args.sim_gate is not None:
        overrides["sim_gate"] = args.sim_gate
    if args.prob_threshold is not None:
        overrides["prob_threshold"] = args.prob_threshold
    if args.no_subword:
        overrides["use_subword_attack"] = False
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.max_target_queries is not None:
        overrides["max_target_queries"] = args.max_target_queries
    if args.antonym_filter:
        overrides["use_antonym_filter"] = True
    if args.verify_success:
        overrides["verify_success"] = True
    return attack_config_from_dict(overrides, base=base)


def _model_manifest(args: argparse.Namespace) -> dict:
    def describe(value: str | None) -> dict | None:
        if value is None:
            return None
        if _is_url(value):
            return {"url": value}
        return {"path": value, "checksums": bundle_checksums(value)}

    return {
        "target": describe(args.target),
        "mlm": describe(args.mlm),
        "similarity": args.similarity,
    }


def _write_manifest(args, cfg: AttackConfig, out_dir: Path, extra: dict) -> None:
    from .evaluation import config_echo

    manifest = {
        "command": args.command,
        "version": __version__,
        "config": config_echo(cfg),
        "models": _model_manifest(args),
        "workers": getattr(args, "workers", 1),
        "max_samples": getattr(args, "max_samples", None),
    }
    corpus = getattr(args, "corpus", None)
    if corpus:
        manifest["corpus"] = {
            "path": str(corpus),
            "sha256": _sha256_file(Path(corpus)),
        }
    manifest.update(extra)
    out_dir.joinpath("run_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_run(result: EvaluationResult, out_dir: Path, label: str | None = None) -> None:
    suffix = "" if label is None else f"-{label}"
    summary = result.report.to_json(include_timing=False)
    out_dir.joinpath(f"summary{suffix}.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    write_jsonl(
        (r.to_json() for r in result.records), out_dir / f"samples{suffix}.jsonl"
    )
    timing_lines = [
        {"id": sample_id, "seconds": seconds}
        for sample_id, seconds in sorted(result.timings.items())
    ]
    timing_lines.append(
        {
            "avg_runtime_s": result.report.avg_runtime_s,
            "wall_time_s": result.wall_time_s,
        }
    )
    write_jsonl(timing_lines, out_dir / f"timings{suffix}.jsonl")


def _sanitize(label: str) -> str:
    return label.replace("=", "-")


def _parse_values(dimension: AblationDimension, raw: str | None):
    if raw is None:
        return None
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if dimension == AblationDimension.K_SWEEP:
        return [int(p) for p in parts]
    if dimension == AblationDimension.RANKING_MODES:
        return [RankingMode(p.lower()) for p in parts]
    if dimension == AblationDimension.SUBWORD_TOGGLE:
        return [p.lower() in ("on", "true", "1", "yes") for p in parts]
    return [None if p.lower() == "none" else float(p) for p in parts]


def _gold_value(raw: str) -> int | str:
    try:
        return int(raw)
    except ValueError:
        return raw


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--target", required=True, help="model bundle directory or service URL"
    )
    parser.add_argument(
        "--mlm", default=None, help="masked-LM bundle directory or service URL"
    )
    parser.add_argument(
        "--similarity",
        default="bow",
        help="similarity backend: 'bow', 'off' or a service URL",
    )


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument(
        "--ranking", choices=[m.value for m in RankingMode], default=None
    )
    parser.add_argument("--sim-threshold", type=float, default=None)
    parser.add_argument(
        "--sim-gate", choices=["post_hoc", "in_loop", "off"], default=None
    )
    parser.add_argument("--prob-threshold", type=float, default=None)
    parser.add_argument("--no-subword", action="store_true")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--max-target-queries", type=int, default=None)
    parser.add_argument("--antonym-filter", action="store_true")
    parser.add_argument("--verify-success", action="store_true")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--max-samples", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlmattack",
        description="Word-substitution attacks on text classifiers via masked-LM candidates",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="attack one sample and print the record")
    _add_model_flags(p)
    _add_config_flags(p)
    p.add_argument("--text", default=None)
    p.add_argument("--premise", default=None)
    p.add_argument("--hypothesis", default=None)
    p.add_argument("--attack-side", choices=["premise", "hypothesis"], default="hypothesis")
    p.add_argument("--gold", required=True, help="gold label id or name")
    p.add_argument("--id", default="cli", help="sample id for the record")
    p.add_argument("--out", default=None, help="write the record here instead of stdout")

    p = sub.add_parser("evaluate", help="attack a corpus and write metrics")
    _add_model_flags(p)
    _add_config_flags(p)
    _add_run_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ablate", help="evaluate once per variant along one dimension")
    _add_model_flags(p)
    _add_config_flags(p)
    _add_run_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument(
        "--dimension",
        required=True,
        choices=["k-sweep", "ranking-modes", "subword-toggle", "prob-threshold"],
    )
    p.add_argument("--values", default=None, help="comma-separated variant values")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("transfer", help="re-classify one run's adversarial samples")
    _add_model_flags(p)
    p.add_argument("--records", required=True, help="samples.jsonl from a previous run")
    p.add_argument("--source-labels", default=None, help="label_map.json of the source run")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = sub.add_parser("export-adv", help="write corpus + adversarial training lines")
    _add_model_flags(p)
    _add_config_flags(p)
    _add_run_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="augmented corpus file")
    p.add_argument("--summary", default=None, help="optional summary JSON path")

    p = sub.add_parser("serve", help="serve a bundle over the model protocol")
    p.add_argument("--target", required=True, help="model bundle directory")
    p.add_argument(
        "--similarity", default="bow", help="similarity backend: 'bow' or 'off'"
    )
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8300)

    return parser


def _cmd_attack(args) -> int:
    cfg = _load_config(args)
    gateway = build_gateway(args.target, args.mlm, args.similarity)
    if args.text is None and args.premise is None:
        raise ConfigError("pass --text or --premise/--hypothesis")
    sample = TextSample(
        id=args.id,
        label=_gold_value(args.gold),
        text=args.text,
        premise=args.premise,
        hypothesis=args.hypothesis,
        attack_side=args.attack_side,
    )
    outcome = attack(sample, cfg, gateway.session())
    record = record_for(sample, outcome, cfg, gateway.label_map)
    payload = json.dumps(record.to_json(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    gateway = build_gateway(args.target, args.mlm, args.similarity)
    corpus = load_corpus(args.corpus)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.info("evaluating %d samples from %s", len(corpus), args.corpus)
    result = evaluate(
        corpus, cfg, gateway, workers=args.workers, max_samples=args.max_samples
    )
    _write_run(result, out_dir)
    _write_manifest(args, cfg, out_dir, {})
    log.info(
        "done: original %.3f attacked %.3f",
        result.report.original_accuracy or 0.0,
        result.report.attacked_accuracy or 0.0,
    )
    return 0


def _cmd_ablate(args) -> int:
    cfg = _load_config(args)
    gateway = build_gateway(args.target, args.mlm, args.similarity)
    corpus = load_corpus(args.corpus)
    dimension = AblationDimension(args.dimension.replace("-", "_"))
    values = _parse_values(dimension, args.values)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = ablate(
        corpus,
        cfg,
        dimension,
        gateway,
        values=values,
        workers=args.workers,
        max_samples=args.max_samples,
    )
    variants = {}
    for label, result in results.items():
        safe = _sanitize(label)
        _write_run(result, out_dir, label=safe)
        variants[label] = {
            "summary": f"summary-{safe}.json",
            "samples": f"samples-{safe}.jsonl",
        }
    _write_manifest(
        args, cfg, out_dir, {"dimension": dimension.value, "variants": variants}
    )
    return 0


def _cmd_transfer(args) -> int:
    gateway = build_gateway(args.target, args.mlm, args.similarity, need_mlm=False)
    records = read_records(args.records)
    source_map = None
    if args.source_labels:
        source_map = LabelMap.load(args.source_labels)
    report = transfer_evaluate(records, gateway, source_label_map=source_map)
    payload = json.dumps(report.to_json(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def _cmd_export_adv(args) -> int:
    cfg = _load_config(args)
    gateway = build_gateway(args.target, args.mlm, args.similarity)
    corpus = load_corpus(args.corpus)
    result = export_adversarial_training_set(
        corpus,
        cfg,
        gateway,
        args.out,
        workers=args.workers,
        max_samples=args.max_samples,
    )
    if args.summary:
        Path(args.summary).write_text(
            json.dumps(result.report.to_json(include_timing=False), sort_keys=True, indent=2)
            + "\n",
            encoding="utf-8",
        )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    if _is_url(args.target):
        raise ConfigError("serve requires a local bundle directory")
    sim = _build_similarity(args.similarity)
    gateway = load_bundle(args.target, similarity=sim)
    app = create_app(gateway)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "attack": _cmd_attack,
    "evaluate": _cmd_evaluate,
    "ablate": _cmd_ablate,
    "transfer": _cmd_transfer,
    "export-adv": _cmd_export_adv,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MlmAttackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
