"""FastAPI application serving one model gateway.

The three model-role endpoints (/classify, /mlm_topk, /embed) speak the
same protocol the remote backend consumes, so one process can serve models
to another engine instance.  /attack and /evaluate run the engine in-process
against the served models.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..config import attack_config_from_dict
from ..engine import AttackConfig, attack
from ..errors import BackendUnavailable, MlmAttackError
from ..evaluation import record_for, evaluate
from ..gateway import ModelGateway
from ..samples import TextSample
from . import schemas


def _sample_from_body(body: schemas.SampleBody) -> TextSample:
    return TextSample(
        id=body.id,
        label=body.label,
        text=body.text,
        premise=body.premise,
        hypothesis=body.hypothesis,
        attack_side=body.attack_side,
    )


def create_app(gateway: ModelGateway, base_config: AttackConfig | None = None) -> FastAPI:
    app = FastAPI(title="mlmattack service", version="1.0")
    base = base_config if base_config is not None else AttackConfig()

    @app.exception_handler(MlmAttackError)
    async def _domain_error(request: Request, exc: MlmAttackError):
        status = 503 if isinstance(exc, BackendUnavailable) else 422
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/meta", response_model=schemas.MetaResponse)
    def meta() -> schemas.MetaResponse:
        return schemas.MetaResponse(
            n_labels=len(gateway.label_map),
            label_map=dict(gateway.label_map.name_to_id),
            max_positions=gateway.max_positions,
            cased=gateway.vocab.cased,
            logit_kind=gateway.logit_kind,
            has_mlm=gateway.mlm is not None,
            has_similarity=gateway.similarity is not None,
        )

    @app.get("/vocab", response_class=PlainTextResponse)
    def vocab() -> str:
        return "\n".join(gateway.vocab.tokens) + "\n"

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    def classify(body: schemas.ClassifyRequest) -> schemas.ClassifyResponse:
        if body.text is not None:
            logits = gateway.raw_classify(body.text)
        else:
            logits = gateway.raw_classify((body.premise, body.hypothesis))
        return schemas.ClassifyResponse(logits=list(logits.values))

    @app.post("/mlm_topk", response_model=schemas.MlmTopKResponse)
    def mlm_topk(body: schemas.MlmTopKRequest) -> schemas.MlmTopKResponse:
        ids, logprobs = gateway.raw_topk(body.token_ids, body.k)
        return schemas.MlmTopKResponse(token_ids=ids, logprobs=logprobs)

    @app.post("/embed", response_model=schemas.EmbedResponse)
    def embed(body: schemas.EmbedRequest) -> schemas.EmbedResponse:
        return schemas.EmbedResponse(vector=gateway.raw_embed(body.text))

    @app.post("/attack", response_model=schemas.AttackResponse)
    def attack_one(body: schemas.AttackRequest) -> schemas.AttackResponse:
        cfg = attack_config_from_dict(body.config, base=base)
        sample = _sample_from_body(body.sample)
        outcome = attack(sample, cfg, gateway.session())
        record = record_for(sample, outcome, cfg, gateway.label_map)
        return schemas.AttackResponse(record=record.to_json())

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_corpus(body: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        cfg = attack_config_from_dict(body.config, base=base)
        samples = [_sample_from_body(s) for s in body.samples]
        result = evaluate(
            samples, cfg, gateway, workers=body.workers, max_samples=body.max_samples
        )
        return schemas.EvaluateResponse(
            summary=result.report.to_json(),
            records=[r.to_json() for r in result.records],
        )

    return app
