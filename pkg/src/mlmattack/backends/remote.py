"""Clients for the JSON-over-HTTP model protocol.

Endpoints: POST /classify, /mlm_topk, /embed plus GET /meta and /vocab for
discovery.  Any server speaking this protocol works; the bundled FastAPI
service is one implementation.
"""

from __future__ import annotations

import httpx

from ..errors import BackendUnavailable
from ..gateway import LabelMap, ModelGateway
from ..tokenization import Vocabulary


class RemoteService:
    """One HTTP connection to a model service, shared by the role clients."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.client = httpx.Client(base_url=self.base_url, timeout=timeout)

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self.client.post(path, json=payload)
            response.raise_for_status()
            return response.json()
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"POST {self.base_url}{path}: {exc}") from exc

    def get_json(self, path: str) -> dict:
        try:
            response = self.client.get(path)
            response.raise_for_status()
            return response.json()
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"GET {self.base_url}{path}: {exc}") from exc

    def get_text(self, path: str) -> str:
        try:
            response = self.client.get(path)
            response.raise_for_status()
            return response.text
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"GET {self.base_url}{path}: {exc}") from exc

    def close(self) -> None:
        self.client.close()


class RemoteClassifier:
    def __init__(self, service: RemoteService, n_labels: int):
        self.service = service
        self.n_labels = n_labels

    def logits(self, text: str, pair: str | None = None) -> list[float]:
        if pair is None:
            payload = {"text": text}
        else:
            payload = {"premise": text, "hypothesis": pair}
        return self.service.post("/classify", payload)["logits"]


class RemoteMlm:
    def __init__(self, service: RemoteService, max_positions: int | None):
        self.service = service
        self.max_positions = max_positions

    def topk(self, token_ids, k: int):
        body = self.service.post("/mlm_topk", {"token_ids": list(token_ids), "k": k})
        return body["token_ids"], body["logprobs"]


class RemoteEmbedding:
    def __init__(self, service: RemoteService):
        self.service = service

    def embed(self, text: str) -> list[float]:
        return self.service.post("/embed", {"text": text})["vector"]


def remote_gateway(base_url: str, similarity="auto", timeout: float = 60.0) -> ModelGateway:
    """Wire every model role to one remote service, discovered via /meta.

    ``similarity`` is "auto" (use the service's /embed when advertised),
    None (gate disabled), or any embedding backend object.
    """
    service = RemoteService(base_url, timeout=timeout)
    meta = service.get_json("/meta")
    label_map = LabelMap({str(k): int(v) for k, v in meta["label_map"].items()})
    vocab_text = service.get_text("/vocab")
    tokens = vocab_text.splitlines()
    while tokens and tokens[-1] == "":
        tokens.pop()
    vocab = Vocabulary(tokens=tokens, cased=bool(meta["cased"]))
    classifier = RemoteClassifier(service, n_labels=len(label_map))
    mlm = RemoteMlm(service, meta.get("max_positions")) if meta.get("has_mlm") else None
    if similarity == "auto":
        similarity = RemoteEmbedding(service) if meta.get("has_similarity") else None
    return ModelGateway(
        classifier,
        mlm,
        label_map,
        vocab,
        similarity=similarity,
        logit_kind=str(meta.get("logit_kind", "raw")),
    )
