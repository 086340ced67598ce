"""Adversarial fine-tuning from an engine-exported training file.

The input is the augmented corpus the attack engine writes: one JSON
object per line with ``id``, ``label`` and ``text``, where each
adversarial row follows its original and carries the original's gold
label under an ``-adv`` id suffix.  Fine-tuning continues the classifier
from its checkpoint on that mixture, which pushes the model to keep its
prediction stable under exactly the substitutions the attack found.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch

from .errors import CheckpointError, SchemaError
from .models import (
    CLASSIFIER_KIND,
    fit_classifier,
    load_checkpoint,
    save_checkpoint,
)

ADV_ID_SUFFIX = "-adv"


@dataclass(frozen=True)
class AugmentedCorpus:
    rows: list[tuple[str, str]]  # (text, label name)
    n_original: int
    n_adversarial: int


def read_augmented(path: str | Path) -> AugmentedCorpus:
    """Parse an augmented corpus file, counting adversarial rows by id."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"missing training file: {path}")
    rows: list[tuple[str, str]] = []
    n_adv = 0
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: not JSON: {exc}") from exc
            if not isinstance(record, dict) or "label" not in record:
                raise SchemaError(f"{path}:{lineno}: record has no label")
            text = record.get("text")
            if not isinstance(text, str) or not text.strip():
                raise SchemaError(
                    f"{path}:{lineno}: fine-tuning needs single-text records"
                )
            rows.append((text, str(record["label"])))
            if str(record.get("id", "")).endswith(ADV_ID_SUFFIX):
                n_adv += 1
    if not rows:
        raise SchemaError(f"{path}: no training rows")
    return AugmentedCorpus(rows=rows, n_original=len(rows) - n_adv, n_adversarial=n_adv)


def finetune_on_adversarial(
    classifier_ref: str | Path,
    augmented_path: str | Path,
    out_ref: str | Path,
    *,
    steps: int = 300,
    lr: float = 1e-3,
    seed: int = 0,
) -> AugmentedCorpus:
    """Continue training the checkpoint on the augmented corpus.

    Writes the fine-tuned checkpoint to ``out_ref`` and returns the parsed
    corpus so callers can report how many adversarial rows went in.  Label
    names are resolved against the checkpoint's own label map; an unknown
    name is a schema error.
    """
    model, meta = load_checkpoint(classifier_ref)
    if meta["kind"] != CLASSIFIER_KIND:
        raise CheckpointError(f"{classifier_ref}: expected a classifier checkpoint")
    torch.manual_seed(seed)  # dropout noise must not depend on caller RNG state
    corpus = read_augmented(augmented_path)
    labels = meta["labels"]
    try:
        rows = [(text, labels[name]) for text, name in corpus.rows]
    except KeyError as exc:
        raise SchemaError(
            f"label {exc.args[0]!r} not in checkpoint label map {sorted(labels)}"
        ) from exc
    fit_classifier(model, meta["tokens"], rows, steps=steps, lr=lr, seed=seed)
    save_checkpoint(
        model,
        out_ref,
        name=meta["name"],
        tokens=meta["tokens"],
        labels=labels,
    )
    return corpus
