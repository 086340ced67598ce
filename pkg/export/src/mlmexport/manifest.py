"""The export manifest recorded next to every emitted bundle."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

MANIFEST_NAME = "export_manifest.json"


@dataclass(frozen=True)
class ParityReport:
    """Outcome of the eager-vs-exported logit comparison."""

    verified: bool
    n_probes: int
    max_abs_logit_diff: float | None

    @property
    def status(self) -> str:
        return "verified" if self.verified else "unverified"


@dataclass(frozen=True)
class BundleManifest:
    classifier_name: str
    classifier_revision: str  # sha256 of the source checkpoint file
    mlm_name: str
    mlm_revision: str
    export_format: str
    export_runtime: str  # serializer library version
    exporter_version: str
    max_positions: int
    cased: bool
    logit_kind: str
    checksums: dict[str, str]  # emitted bundle file -> sha256
    parity: ParityReport

    def to_json(self) -> dict:
        data = asdict(self)
        data["parity"]["status"] = self.parity.status
        return data

    @classmethod
    def from_json(cls, data: dict) -> "BundleManifest":
        parity = dict(data["parity"])
        parity.pop("status", None)
        return cls(**{**data, "parity": ParityReport(**parity)})

    def save(self, bundle_dir: str | Path) -> Path:
        path = Path(bundle_dir) / MANIFEST_NAME
        path.write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        return path

    @classmethod
    def load(cls, bundle_dir: str | Path) -> "BundleManifest":
        path = Path(bundle_dir) / MANIFEST_NAME
        return cls.from_json(json.loads(path.read_text(encoding="utf-8")))
