"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ClassifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    text: str | None = None
    premise: str | None = None
    hypothesis: str | None = None

    @model_validator(mode="after")
    def _one_form(self):
        single = self.text is not None
        pair = self.premise is not None and self.hypothesis is not None
        half_pair = (self.premise is None) != (self.hypothesis is None)
        if half_pair or single == pair:
            raise ValueError("send either text or premise+hypothesis")
        return self


class ClassifyResponse(BaseModel):
    logits: list[float]


class MlmTopKRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    token_ids: list[int]
    k: int = Field(ge=1)


class MlmTopKResponse(BaseModel):
    token_ids: list[list[int]]
    logprobs: list[list[float]]


class EmbedRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    text: str


class EmbedResponse(BaseModel):
    vector: list[float]


class MetaResponse(BaseModel):
    n_labels: int
    label_map: dict[str, int]
    max_positions: int | None
    cased: bool
    logit_kind: str
    has_mlm: bool
    has_similarity: bool


class SampleBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    label: int | str
    text: str | None = None
    premise: str | None = None
    hypothesis: str | None = None
    attack_side: str = "hypothesis"


class AttackRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sample: SampleBody
    config: dict = Field(default_factory=dict)


class AttackResponse(BaseModel):
    record: dict


class EvaluateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: list[SampleBody]
    config: dict = Field(default_factory=dict)
    workers: int = Field(default=1, ge=1)
    max_samples: int | None = Field(default=None, ge=1)


class EvaluateResponse(BaseModel):
    summary: dict
    records: list[dict]
