import dataclasses
import socket
import threading
import time

import pytest
import uvicorn
from fastapi.testclient import TestClient

from mlmattack.backends import HashedBowEmbedding, load_bundle
from mlmattack.backends.remote import remote_gateway
from mlmattack.engine import AttackConfig, attack
from mlmattack.gateway import ModelGateway
from mlmattack.samples import TextSample
from mlmattack.service.app import create_app
from stubs import KeywordClassifier, TableMlm, binary_labels, make_vocab

POS = {"great"}
NEG = {"awful"}


@pytest.fixture()
def client():
    vocab = make_vocab(sorted(POS | NEG) + ["movie", "plot", "cast"])
    rows = {
        vocab.token_to_id["great"]: [
            (vocab.token_to_id["awful"], -0.4),
            (vocab.token_to_id["cast"], -1.0),
        ]
    }
    gateway = ModelGateway(
        classifier=KeywordClassifier(POS, NEG),
        mlm=TableMlm(rows, max_positions=64),
        label_map=binary_labels(),
        vocab=vocab,
        similarity=HashedBowEmbedding(),
    )
    return TestClient(create_app(gateway))


class TestEndpoints:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_meta_advertises_capabilities(self, client):
        meta = client.get("/meta").json()
        assert meta["n_labels"] == 2
        assert meta["label_map"] == {"negative": 0, "positive": 1}
        assert meta["max_positions"] == 64
        assert meta["has_mlm"] is True
        assert meta["has_similarity"] is True
        assert meta["cased"] is False

    def test_vocab_is_one_token_per_line(self, client):
        lines = client.get("/vocab").text.splitlines()
        assert lines[0] == "[PAD]"
        assert "great" in lines

    def test_classify_single(self, client):
        response = client.post("/classify", json={"text": "great movie"})
        assert response.status_code == 200
        assert response.json()["logits"] == [0.05, 1.0]

    def test_classify_pair(self, client):
        response = client.post(
            "/classify", json={"premise": "great", "hypothesis": "awful"}
        )
        assert response.json()["logits"] == [1.05, 1.0]

    def test_classify_rejects_ambiguous_forms(self, client):
        assert client.post("/classify", json={}).status_code == 422
        assert (
            client.post(
                "/classify", json={"text": "x", "premise": "p", "hypothesis": "h"}
            ).status_code
            == 422
        )
        assert client.post("/classify", json={"premise": "p"}).status_code == 422

    def test_classify_rejects_unknown_fields(self, client):
        response = client.post("/classify", json={"text": "x", "extra": 1})
        assert response.status_code == 422

    def test_mlm_topk_shape(self, client):
        vocab_lines = client.get("/vocab").text.splitlines()
        great = vocab_lines.index("great")
        response = client.post(
            "/mlm_topk", json={"token_ids": [great, great + 1], "k": 5}
        )
        body = response.json()
        assert len(body["token_ids"]) == 2
        assert len(body["logprobs"]) == 2
        assert body["logprobs"][0] == sorted(body["logprobs"][0], reverse=True)

    def test_mlm_topk_rejects_nonpositive_k(self, client):
        response = client.post("/mlm_topk", json={"token_ids": [1], "k": 0})
        assert response.status_code == 422

    def test_embed_returns_a_vector(self, client):
        response = client.post("/embed", json={"text": "great movie"})
        vector = response.json()["vector"]
        assert len(vector) == 512
        assert any(v != 0.0 for v in vector)

    def test_attack_returns_a_full_record(self, client):
        response = client.post(
            "/attack",
            json={
                "sample": {"id": "s1", "label": "positive", "text": "great movie plot"},
                "config": {"k": 8},
            },
        )
        assert response.status_code == 200
        record = response.json()["record"]
        assert record["status"] == "success"
        assert record["adversarial"]["text"].startswith("awful")
        assert record["target_queries"] == 4 + record["candidates_tried"]
        assert record["original"]["id"] == "s1"

    def test_attack_unknown_config_key_is_a_422(self, client):
        response = client.post(
            "/attack",
            json={
                "sample": {"id": "s1", "label": "positive", "text": "great movie"},
                "config": {"danger": 1},
            },
        )
        assert response.status_code == 422
        assert response.json()["error"] == "ConfigError"

    def test_attack_bad_sample_is_a_422(self, client):
        response = client.post(
            "/attack", json={"sample": {"id": "s1", "label": "positive"}}
        )
        assert response.status_code == 422

    def test_attack_unknown_label_is_a_422(self, client):
        response = client.post(
            "/attack", json={"sample": {"id": "s1", "label": "maybe", "text": "great"}}
        )
        assert response.status_code == 422

    def test_evaluate_summarizes_a_small_corpus(self, client):
        samples = [
            {"id": "s1", "label": "positive", "text": "great movie plot"},
            {"id": "s2", "label": "positive", "text": "movie plot"},
        ]
        response = client.post("/evaluate", json={"samples": samples, "config": {}})
        body = response.json()
        assert body["summary"]["n_samples"] == 2
        assert body["summary"]["skipped_count"] == 1
        assert body["summary"]["gated_success_count"] == 1
        assert [r["id"] for r in body["records"]] == ["s1", "s2"]


class TestEmbedWithoutBackend:
    def test_embed_is_a_503_when_no_similarity_model_is_served(self):
        vocab = make_vocab(["great"])
        gateway = ModelGateway(
            classifier=KeywordClassifier(POS, NEG),
            mlm=None,
            label_map=binary_labels(),
            vocab=vocab,
        )
        client = TestClient(create_app(gateway), raise_server_exceptions=False)
        response = client.post("/embed", json={"text": "x"})
        assert response.status_code == 503
        assert response.json()["error"] == "BackendUnavailable"


@pytest.fixture(scope="module")
def served_bundle(toy_bundle):
    """The trained bundle served over real HTTP by uvicorn in a thread."""
    gateway = load_bundle(toy_bundle, similarity=HashedBowEmbedding())
    app = create_app(gateway)
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("service did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}", gateway
    server.should_exit = True
    thread.join(timeout=5)


class TestRemoteParity:
    """The engine must behave identically against in-process models and the
    same models served over HTTP."""

    def test_meta_discovery(self, served_bundle):
        url, local = served_bundle
        remote = remote_gateway(url)
        assert remote.label_map == local.label_map
        assert remote.vocab.tokens == local.vocab.tokens
        assert remote.max_positions == local.max_positions
        assert remote.similarity is not None  # advertised and auto-wired

    def test_classify_parity(self, served_bundle):
        url, local = served_bundle
        remote = remote_gateway(url)
        for text in ("a great movie", "an awful movie", "the plot was dull"):
            assert remote.raw_classify(text).values == pytest.approx(
                local.raw_classify(text).values, abs=1e-5
            )

    def test_full_attack_parity(self, served_bundle):
        url, local = served_bundle
        remote = remote_gateway(url)
        cfg = AttackConfig(k=12)
        sample = TextSample(
            id="p1", label="positive", text="the ending felt delightful to me"
        )
        local_out = attack(sample, cfg, local.session())
        remote_out = attack(sample, cfg, remote.session())
        assert dataclasses.replace(local_out, elapsed=0.0, similarity=0.0) == (
            dataclasses.replace(remote_out, elapsed=0.0, similarity=0.0)
        )
        if local_out.similarity is not None:
            assert remote_out.similarity == pytest.approx(local_out.similarity, abs=1e-6)

    def test_similarity_off_disables_the_gate(self, served_bundle):
        url, _ = served_bundle
        remote = remote_gateway(url, similarity=None)
        assert remote.similarity is None
