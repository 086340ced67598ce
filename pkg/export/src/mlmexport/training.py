"""One-call training of the starter checkpoint pair plus its corpora."""

from __future__ import annotations

from pathlib import Path

import torch

from .models import (
    MaskedWordModel,
    SentimentClassifier,
    fit_classifier,
    fit_mlm,
    save_checkpoint,
)
from .world import (
    LABELS,
    MAX_POSITIONS,
    consistent_corpus,
    mixed_context_corpus,
    vocabulary,
    write_corpus,
)

CLASSIFIER_FILE = "classifier.ckpt"
MLM_FILE = "mlm.ckpt"
TRAIN_CORPUS_FILE = "train.jsonl"
EVAL_CORPUS_FILE = "eval.jsonl"


def train_tiny_world(
    out_dir: str | Path,
    *,
    seed: int = 0,
    corpus_size: int = 400,
    eval_size: int = 60,
    classifier_steps: int = 300,
    mlm_steps: int = 500,
    train_verb_noise: float = 0.4,
) -> dict[str, Path]:
    """Train the starter models and write everything attack runs need.

    The classifier and MLM are fit on the mixed-context corpus, so the
    classifier leans on the adjective cue alone.  Alongside the two
    checkpoints the directory gets a consistent-regime training corpus
    (the pool to harvest adversarial samples from, with enough verb-slot
    noise that fine-tuning on it must aggregate the verb trio rather than
    shortcut on one slot) and a noise-free consistent evaluation corpus.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokens = vocabulary()
    base = mixed_context_corpus(corpus_size, seed=seed)

    torch.manual_seed(seed)
    classifier = SentimentClassifier(len(tokens), len(LABELS), MAX_POSITIONS)
    fit_classifier(
        classifier,
        tokens,
        [(s.text, LABELS[s.label]) for s in base],
        steps=classifier_steps,
        seed=seed,
    )
    torch.manual_seed(seed + 1)
    mlm = MaskedWordModel(len(tokens), MAX_POSITIONS)
    fit_mlm(mlm, tokens, [s.text for s in base], steps=mlm_steps, seed=seed + 1)

    paths = {
        "classifier": save_checkpoint(
            classifier,
            out / CLASSIFIER_FILE,
            name="tiny-sentiment-classifier",
            tokens=tokens,
            labels=dict(LABELS),
        ),
        "mlm": save_checkpoint(
            mlm, out / MLM_FILE, name="tiny-sentiment-mlm", tokens=tokens
        ),
        "train_corpus": out / TRAIN_CORPUS_FILE,
        "eval_corpus": out / EVAL_CORPUS_FILE,
    }
    write_corpus(
        consistent_corpus(
            corpus_size, seed=seed + 2, id_prefix="t", verb_noise=train_verb_noise
        ),
        paths["train_corpus"],
    )
    write_corpus(
        consistent_corpus(eval_size, seed=seed + 3, id_prefix="e"),
        paths["eval_corpus"],
    )
    return paths
