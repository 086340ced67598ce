"""In-process inference over exported TorchScript graphs.

A bundle is a directory with ``classifier.pt``, ``mlm.pt``, ``vocab.txt``,
``label_map.json`` and ``bundle.json`` ({max_positions, cased, logit_kind}).
Both graphs take (input_ids, attention_mask, token_type_ids) int64 batches
and were traced by whatever framework produced them; nothing here depends
on the exporter.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch

from ..errors import BackendUnavailable, ShapeMismatch
from ..gateway import LabelMap, ModelGateway
from ..tokenization import CLS_TOKEN, SEP_TOKEN, Vocabulary, encode_for_classifier

BUNDLE_FILES = ("classifier.pt", "mlm.pt", "vocab.txt", "label_map.json", "bundle.json")


def _load_graph(path: Path) -> torch.jit.ScriptModule:
    try:
        module = torch.jit.load(str(path), map_location="cpu")
    except (RuntimeError, ValueError) as exc:
        raise BackendUnavailable(f"cannot load graph {path}: {exc}") from exc
    module.eval()
    return module


def _run(module, input_ids: list[int], type_ids: list[int]) -> torch.Tensor:
    ids = torch.tensor([input_ids], dtype=torch.long)
    mask = torch.ones_like(ids)
    types = torch.tensor([type_ids], dtype=torch.long)
    with torch.no_grad():
        out = module(ids, mask, types)
    if isinstance(out, (tuple, list)):
        out = out[0]
    return out


class TorchscriptClassifier:
    def __init__(self, path, vocab: Vocabulary, max_positions: int, n_labels: int):
        self.module = _load_graph(Path(path))
        self.vocab = vocab
        self.max_positions = max_positions
        self.n_labels = n_labels

    def logits(self, text: str, pair: str | None = None) -> list[float]:
        input_ids, type_ids = encode_for_classifier(
            self.vocab, text, pair, max_positions=self.max_positions
        )
        out = _run(self.module, input_ids, type_ids)
        if out.ndim != 2 or out.shape[1] != self.n_labels:
            raise ShapeMismatch(f"classifier output {tuple(out.shape)}, want (1, {self.n_labels})")
        return [float(v) for v in out[0]]


class TorchscriptMlm:
    def __init__(self, path, vocab: Vocabulary, max_positions: int):
        self.module = _load_graph(Path(path))
        self.vocab = vocab
        self.max_positions = max_positions
        self._cls = vocab.token_to_id[CLS_TOKEN]
        self._sep = vocab.token_to_id[SEP_TOKEN]

    def _log_probs(self, token_ids) -> torch.Tensor:
        """Per-position vocab log-probs for the framed sequence; rows are the
        inner positions only, aligned with ``token_ids``."""
        framed = [self._cls, *token_ids, self._sep]
        out = _run(self.module, framed, [0] * len(framed))
        if out.ndim != 3 or out.shape[1] != len(framed):
            raise ShapeMismatch(f"MLM output {tuple(out.shape)}")
        return torch.log_softmax(out[0, 1 : 1 + len(token_ids)], dim=-1)

    def topk(self, token_ids, k: int) -> tuple[list[list[int]], list[list[float]]]:
        log_probs = self._log_probs(list(token_ids))
        values, indices = torch.topk(log_probs, k=min(k, log_probs.shape[-1]), dim=-1)
        return indices.tolist(), [[float(v) for v in row] for row in values]

    def span_logprobs(self, token_ids, start: int, span_ids) -> list[float]:
        """Each span token's log-prob with the whole span substituted in."""
        swapped = list(token_ids)
        swapped[start : start + len(span_ids)] = list(span_ids)
        log_probs = self._log_probs(swapped)
        return [float(log_probs[start + j, tid]) for j, tid in enumerate(span_ids)]


def load_bundle(path, similarity=None) -> ModelGateway:
    """Open a bundle directory and wire its graphs into a gateway."""
    root = Path(path)
    meta_path = root / "bundle.json"
    if not meta_path.exists():
        raise BackendUnavailable(f"no bundle.json in {root}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    vocab = Vocabulary.load(root / "vocab.txt", cased=bool(meta["cased"]))
    label_map = LabelMap.load(root / "label_map.json")
    max_positions = int(meta["max_positions"])
    classifier = TorchscriptClassifier(
        root / "classifier.pt", vocab, max_positions, n_labels=len(label_map)
    )
    mlm_path = root / "mlm.pt"
    mlm = TorchscriptMlm(mlm_path, vocab, max_positions) if mlm_path.exists() else None
    return ModelGateway(
        classifier,
        mlm,
        label_map,
        vocab,
        similarity=similarity,
        logit_kind=str(meta.get("logit_kind", "raw")),
    )


def bundle_checksums(path) -> dict[str, str]:
    """sha256 per bundle file, for run manifests."""
    root = Path(path)
    out = {}
    for name in BUNDLE_FILES:
        file = root / name
        if file.exists():
            out[name] = hashlib.sha256(file.read_bytes()).hexdigest()
    return out
