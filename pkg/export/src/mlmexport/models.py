"""Tiny transformer models, their training loops, and checkpoint files.

A checkpoint is a single ``torch.save`` file carrying the weights plus
everything needed to rebuild and re-encode for the model: architecture
sizes, the token list, the label map (classifiers only), and the position
budget.  Keeping the vocabulary inside the checkpoint makes a checkpoint
pair self-describing, so exporting never needs a side channel.

Models stay at 2 layers / 64 dims on purpose: the whole train-export-
attack-finetune cycle has to run in seconds on a plain CPU.
"""

from __future__ import annotations

import math
import random
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .errors import CheckpointError, TrainingDiverged
from .world import CLS_TOKEN, MASK_TOKEN, PAD_TOKEN, SEP_TOKEN, SPECIALS, UNK_TOKEN

CLASSIFIER_KIND = "classifier"
MLM_KIND = "mlm"

DEFAULT_ARCH = {"d_model": 64, "heads": 4, "layers": 2, "ffn": 128}


class EncoderBody(nn.Module):
    """Shared embedding + transformer stack for both heads."""

    def __init__(self, vocab_size: int, max_positions: int, arch: dict):
        super().__init__()
        d = arch["d_model"]
        self.tok = nn.Embedding(vocab_size, d)
        self.pos = nn.Embedding(max_positions, d)
        self.typ = nn.Embedding(2, d)
        layer = nn.TransformerEncoderLayer(
            d, arch["heads"], dim_feedforward=arch["ffn"], dropout=0.1, batch_first=True
        )
        self.encoder = nn.TransformerEncoder(
            layer, arch["layers"], enable_nested_tensor=False
        )

    def forward(self, input_ids, attention_mask, token_type_ids):
        # cumsum keeps position indices shape-dynamic under tracing
        positions = torch.cumsum(torch.ones_like(input_ids), dim=1) - 1
        hidden = self.tok(input_ids) + self.pos(positions) + self.typ(token_type_ids)
        return self.encoder(hidden, src_key_padding_mask=attention_mask == 0)


class SentimentClassifier(nn.Module):
    """[CLS]-pooled sequence classifier emitting raw per-label logits."""

    def __init__(self, vocab_size: int, n_labels: int, max_positions: int, arch=None):
        super().__init__()
        self.arch = dict(arch or DEFAULT_ARCH)
        self.max_positions = max_positions
        self.body = EncoderBody(vocab_size, max_positions, self.arch)
        self.head = nn.Linear(self.arch["d_model"], n_labels)

    def forward(self, input_ids, attention_mask, token_type_ids):
        hidden = self.body(input_ids, attention_mask, token_type_ids)
        return self.head(hidden[:, 0])


class MaskedWordModel(nn.Module):
    """Per-position vocabulary logits for masked-word prediction."""

    def __init__(self, vocab_size: int, max_positions: int, arch=None):
        super().__init__()
        self.arch = dict(arch or DEFAULT_ARCH)
        self.max_positions = max_positions
        self.body = EncoderBody(vocab_size, max_positions, self.arch)
        self.head = nn.Linear(self.arch["d_model"], vocab_size)

    def forward(self, input_ids, attention_mask, token_type_ids):
        return self.head(self.body(input_ids, attention_mask, token_type_ids))


def token_index(tokens: Sequence[str]) -> dict[str, int]:
    return {token: i for i, token in enumerate(tokens)}


def encode(index: dict[str, int], text: str, max_positions: int) -> list[int]:
    """[CLS] word-ids [SEP], words resolved whole against the token list."""
    unk = index[UNK_TOKEN]
    ids = [index[CLS_TOKEN]]
    ids.extend(index.get(word, unk) for word in text.split())
    ids.append(index[SEP_TOKEN])
    if len(ids) > max_positions:
        ids = ids[: max_positions - 1] + [index[SEP_TOKEN]]
    return ids


def _pad_batch(rows: list[list[int]], pad_id: int) -> torch.Tensor:
    width = max(len(r) for r in rows)
    return torch.tensor([r + [pad_id] * (width - len(r)) for r in rows], dtype=torch.long)


def _check_finite(loss: torch.Tensor, what: str) -> None:
    if not math.isfinite(float(loss.detach())):
        raise TrainingDiverged(f"{what} loss became non-finite")


def fit_classifier(
    model: SentimentClassifier,
    tokens: Sequence[str],
    rows: Sequence[tuple[str, int]],
    *,
    steps: int,
    lr: float = 1e-3,
    seed: int = 0,
    batch_size: int = 32,
) -> SentimentClassifier:
    """Run Adam on (text, label-id) rows; used for both initial training
    and adversarial fine-tuning."""
    index = token_index(tokens)
    pad_id = index[PAD_TOKEN]
    encoded = [(encode(index, text, model.max_positions), label) for text, label in rows]
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    rng = random.Random(seed)
    model.train()
    for _ in range(steps):
        batch = [encoded[rng.randrange(len(encoded))] for _ in range(batch_size)]
        ids = _pad_batch([b[0] for b in batch], pad_id)
        mask = (ids != pad_id).long()
        types = torch.zeros_like(ids)
        target = torch.tensor([b[1] for b in batch], dtype=torch.long)
        optimizer.zero_grad()
        loss = loss_fn(model(ids, mask, types), target)
        _check_finite(loss, "classifier")
        loss.backward()
        optimizer.step()
    model.eval()
    return model


def fit_mlm(
    model: MaskedWordModel,
    tokens: Sequence[str],
    texts: Sequence[str],
    *,
    steps: int,
    lr: float = 1e-3,
    seed: int = 1,
    batch_size: int = 32,
    mask_rate: float = 0.25,
) -> MaskedWordModel:
    """Standard denoising objective: mask / corrupt / keep at 70/15/15."""
    index = token_index(tokens)
    pad_id, mask_id = index[PAD_TOKEN], index[MASK_TOKEN]
    framed = [encode(index, text, model.max_positions) for text in texts]
    special_ids = {index[s] for s in SPECIALS}
    word_ids = [i for i in range(len(tokens)) if i not in special_ids]
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss(ignore_index=-100)
    rng = random.Random(seed)
    model.train()
    for _ in range(steps):
        rows = [list(framed[rng.randrange(len(framed))]) for _ in range(batch_size)]
        targets = []
        for row in rows:
            target = [-100] * len(row)
            for position in range(1, len(row) - 1):
                if rng.random() >= mask_rate:
                    continue
                target[position] = row[position]
                roll = rng.random()
                if roll < 0.7:
                    row[position] = mask_id
                elif roll < 0.85:
                    row[position] = word_ids[rng.randrange(len(word_ids))]
            targets.append(target)
        ids = _pad_batch(rows, pad_id)
        target_ids = _pad_batch(targets, -100)
        mask = (ids != pad_id).long()
        types = torch.zeros_like(ids)
        optimizer.zero_grad()
        out = model(ids, mask, types)
        loss = loss_fn(out.reshape(-1, len(tokens)), target_ids.reshape(-1))
        _check_finite(loss, "masked-word")
        loss.backward()
        optimizer.step()
    model.eval()
    return model


def save_checkpoint(
    model: nn.Module,
    path: str | Path,
    *,
    name: str,
    tokens: Sequence[str],
    labels: dict[str, int] | None = None,
) -> Path:
    if isinstance(model, SentimentClassifier):
        kind = CLASSIFIER_KIND
        if labels is None:
            raise CheckpointError("classifier checkpoints need a label map")
    elif isinstance(model, MaskedWordModel):
        kind = MLM_KIND
        labels = None
    else:
        raise CheckpointError(f"unsupported model type {type(model).__name__}")
    payload = {
        "kind": kind,
        "name": name,
        "arch": model.arch,
        "max_positions": model.max_positions,
        "tokens": list(tokens),
        "labels": labels,
        "state": model.state_dict(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)
    return path


def load_checkpoint(path: str | Path) -> tuple[nn.Module, dict]:
    """Rebuild the model from a checkpoint file; returns (model, payload).

    The payload keeps tokens / labels / name for the exporter."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"missing checkpoint: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:  # torch raises a zoo of types on corrupt files
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "kind" not in payload or "state" not in payload:
        raise CheckpointError(f"not a model checkpoint: {path}")
    tokens = payload["tokens"]
    if payload["kind"] == CLASSIFIER_KIND:
        model: nn.Module = SentimentClassifier(
            len(tokens),
            len(payload["labels"]),
            payload["max_positions"],
            payload["arch"],
        )
    elif payload["kind"] == MLM_KIND:
        model = MaskedWordModel(len(tokens), payload["max_positions"], payload["arch"])
    else:
        raise CheckpointError(f"unknown checkpoint kind {payload['kind']!r}")
    try:
        model.load_state_dict(payload["state"])
    except RuntimeError as exc:
        raise CheckpointError(f"weights do not fit declared shape: {exc}") from exc
    model.eval()
    return model, payload


@torch.no_grad()
def classify(
    model: SentimentClassifier, tokens: Sequence[str], text: str
) -> list[float]:
    """Eager-mode logits for one sentence; the exporter's parity reference."""
    index = token_index(tokens)
    ids = torch.tensor([encode(index, text, model.max_positions)], dtype=torch.long)
    mask = torch.ones_like(ids)
    return [float(v) for v in model(ids, mask, torch.zeros_like(ids))[0]]
