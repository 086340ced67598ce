"""Turn a checkpoint pair into the portable bundle the attack engine loads.

A bundle directory holds ``classifier.pt`` and ``mlm.pt`` (TorchScript
graphs taking int64 ``input_ids`` / ``attention_mask`` / ``token_type_ids``
batches), ``vocab.txt`` (one token per line), ``label_map.json`` and
``bundle.json`` ({max_positions, cased, logit_kind}).  The exporter also
writes ``export_manifest.json`` with checkpoint revisions, per-file
checksums, and the parity outcome; consumers that only care about
inference can ignore it.

Parity is the safety latch: after serializing, both graphs are loaded
back from disk and compared against the eager models on the probe
sentences.  Any drift beyond the budget fails the export outright.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

import torch

from . import __version__
from .errors import CheckpointError, ParityError, VocabMismatch
from .manifest import BundleManifest, ParityReport
from .models import (
    CLASSIFIER_KIND,
    MLM_KIND,
    encode,
    load_checkpoint,
    token_index,
)
from .world import SPECIALS

PARITY_BUDGET = 1e-3
EXPORT_FORMAT = "torchscript"
BUNDLE_FILES = ("classifier.pt", "mlm.pt", "vocab.txt", "label_map.json", "bundle.json")


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _trace_and_save(model: torch.nn.Module, n_tokens: int, path: Path) -> None:
    # A fixed example keeps the serialized graph byte-stable across runs.
    width = 8
    ids = torch.arange(width, dtype=torch.long).remainder(n_tokens).unsqueeze(0)
    mask = torch.ones_like(ids)
    types = torch.zeros_like(ids)
    model.eval()
    with torch.no_grad():
        traced = torch.jit.trace(model, (ids, mask, types))
    torch.jit.save(traced, str(path))


def _run_graph(module, ids: list[int]) -> torch.Tensor:
    batch = torch.tensor([ids], dtype=torch.long)
    with torch.no_grad():
        return module(batch, torch.ones_like(batch), torch.zeros_like(batch))


def _is_cased(tokens: Sequence[str]) -> bool:
    return any(t != t.lower() for t in tokens if t not in SPECIALS)


def export_bundle(
    classifier_ref: str | Path,
    mlm_ref: str | Path,
    out_dir: str | Path,
    probes: Sequence[str] = (),
    *,
    parity_budget: float = PARITY_BUDGET,
) -> BundleManifest:
    """Export both checkpoints into ``out_dir`` and verify the result.

    With an empty probe list the graphs are still emitted but the
    manifest marks parity ``unverified``.
    """
    classifier, clf_meta = load_checkpoint(classifier_ref)
    mlm, mlm_meta = load_checkpoint(mlm_ref)
    if clf_meta["kind"] != CLASSIFIER_KIND:
        raise CheckpointError(f"{classifier_ref}: expected a classifier checkpoint")
    if mlm_meta["kind"] != MLM_KIND:
        raise CheckpointError(f"{mlm_ref}: expected a masked-LM checkpoint")
    tokens = clf_meta["tokens"]
    if tokens != mlm_meta["tokens"]:
        raise VocabMismatch("classifier and MLM checkpoints carry different token lists")
    if clf_meta["max_positions"] != mlm_meta["max_positions"]:
        raise VocabMismatch("classifier and MLM disagree on max_positions")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _trace_and_save(classifier, len(tokens), out / "classifier.pt")
    _trace_and_save(mlm, len(tokens), out / "mlm.pt")
    (out / "vocab.txt").write_text("\n".join(tokens) + "\n", encoding="utf-8")
    (out / "label_map.json").write_text(
        json.dumps(clf_meta["labels"], indent=2, sort_keys=True), encoding="utf-8"
    )
    meta = {
        "cased": _is_cased(tokens),
        "logit_kind": "raw",
        "max_positions": int(clf_meta["max_positions"]),
    }
    (out / "bundle.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8"
    )

    parity = _check_parity(
        classifier, mlm, tokens, clf_meta["max_positions"], out, probes, parity_budget
    )
    manifest = BundleManifest(
        classifier_name=clf_meta["name"],
        classifier_revision=file_sha256(classifier_ref),
        mlm_name=mlm_meta["name"],
        mlm_revision=file_sha256(mlm_ref),
        export_format=EXPORT_FORMAT,
        export_runtime=torch.__version__,
        exporter_version=__version__,
        max_positions=int(clf_meta["max_positions"]),
        cased=meta["cased"],
        logit_kind="raw",
        checksums={name: file_sha256(out / name) for name in BUNDLE_FILES},
        parity=parity,
    )
    manifest.save(out)
    return manifest


def _check_parity(
    classifier,
    mlm,
    tokens: Sequence[str],
    max_positions: int,
    bundle_dir: Path,
    probes: Sequence[str],
    budget: float,
) -> ParityReport:
    if not probes:
        return ParityReport(verified=False, n_probes=0, max_abs_logit_diff=None)
    graph_classifier = torch.jit.load(str(bundle_dir / "classifier.pt"))
    graph_mlm = torch.jit.load(str(bundle_dir / "mlm.pt"))
    graph_classifier.eval()
    graph_mlm.eval()
    index = token_index(tokens)
    worst = 0.0
    with torch.no_grad():
        for text in probes:
            ids = encode(index, text, max_positions)
            batch = torch.tensor([ids], dtype=torch.long)
            mask = torch.ones_like(batch)
            types = torch.zeros_like(batch)
            for eager, graph in ((classifier, graph_classifier), (mlm, graph_mlm)):
                diff = (eager(batch, mask, types) - graph(batch, mask, types)).abs()
                worst = max(worst, float(diff.max()))
    if worst > budget:
        raise ParityError(
            f"exported graphs drift {worst:.3e} from the source models "
            f"(budget {budget:.1e}) over {len(probes)} probes"
        )
    return ParityReport(verified=True, n_probes=len(probes), max_abs_logit_diff=worst)
