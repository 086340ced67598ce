"""Input samples and JSONL corpus IO.

A sample is either a single text or a (premise, hypothesis) pair; for pairs
only one designated segment is ever perturbed, but the classifier always
sees both.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ConfigError, EmptyInput
from .tokenization import detokenize

PREMISE = "premise"
HYPOTHESIS = "hypothesis"


@dataclass(frozen=True)
class TextSample:
    id: str
    label: int | str
    text: str | None = None
    premise: str | None = None
    hypothesis: str | None = None
    attack_side: str = HYPOTHESIS

    def __post_init__(self):
        if not self.id:
            raise ConfigError("sample id must be non-empty")
        single = self.text is not None
        pair = self.premise is not None or self.hypothesis is not None
        if single == pair:
            raise ConfigError(
                f"sample {self.id!r} needs either text or premise+hypothesis"
            )
        if pair and (self.premise is None or self.hypothesis is None):
            raise ConfigError(f"sample {self.id!r} is missing one pair segment")
        if self.attack_side not in (PREMISE, HYPOTHESIS):
            raise ConfigError(f"unknown attack_side {self.attack_side!r}")

    @property
    def is_pair(self) -> bool:
        return self.text is None

    def attackable_text(self) -> str:
        if not self.is_pair:
            return self.text
        return self.premise if self.attack_side == PREMISE else self.hypothesis

    def render(self, words: tuple[str, ...]) -> str | tuple[str, str]:
        """Rebuild the classifier input with the attacked segment replaced."""
        joined = detokenize(words)
        if not self.is_pair:
            return joined
        if self.attack_side == PREMISE:
            return (joined, self.hypothesis)
        return (self.premise, joined)

    def to_json(self) -> dict:
        record = {"id": self.id, "label": self.label}
        if self.is_pair:
            record["premise"] = self.premise
            record["hypothesis"] = self.hypothesis
            record["attack_side"] = self.attack_side
        else:
            record["text"] = self.text
        return record

    @classmethod
    def from_json(cls, record: dict, fallback_id: str | None = None) -> "TextSample":
        if "label" not in record:
            raise ConfigError(f"sample record has no label: {record!r}")
        return cls(
            id=str(record.get("id") or fallback_id or ""),
            label=record["label"],
            text=record.get("text"),
            premise=record.get("premise"),
            hypothesis=record.get("hypothesis"),
            attack_side=record.get("attack_side", HYPOTHESIS),
        )


def load_corpus(path: str | Path) -> list[TextSample]:
    """Read one sample per JSONL line; ids default to the line number."""
    samples: list[TextSample] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            sample = TextSample.from_json(record, fallback_id=f"s{lineno:06d}")
            if sample.id in seen:
                raise ConfigError(f"duplicate sample id {sample.id!r}")
            seen.add(sample.id)
            samples.append(sample)
    if not samples:
        raise EmptyInput(f"no samples in {path}")
    return samples


def save_corpus(samples: Iterable[TextSample], path: str | Path) -> None:
    write_jsonl((s.to_json() for s in samples), path)


def write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    """Canonical JSONL: sorted keys, no float formatting surprises."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
            handle.write("\n")


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)
