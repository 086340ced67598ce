"""Shared fixtures: one trained world, its bundle, and one full
attack -> fine-tune -> re-attack cycle, all built once per session."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from mlmattack.cli import main as attack_cli
from mlmexport import export_bundle, finetune_on_adversarial
from mlmexport.training import train_tiny_world
from mlmexport.world import probe_sentences

# One attack configuration used identically before and after fine-tuning.
ATTACK_FLAGS = ("--k", "48", "--similarity", "bow", "--sim-threshold", "0.9", "--seed", "0")


def run_evaluation(bundle: Path, corpus: Path, out: Path) -> dict:
    rc = attack_cli(
        ["evaluate", "--target", str(bundle), "--corpus", str(corpus), "--out", str(out)]
        + list(ATTACK_FLAGS)
    )
    assert rc == 0
    return json.loads((out / "summary.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def world(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("world")
    paths = train_tiny_world(root / "ckpt")
    return {"root": root, **paths}


@pytest.fixture(scope="session")
def base_bundle(world) -> Path:
    out = world["root"] / "bundle"
    export_bundle(world["classifier"], world["mlm"], out, probe_sentences(32))
    return out


@pytest.fixture(scope="session")
def finetune_cycle(world, base_bundle) -> dict:
    """Attack the base bundle, fine-tune on its adversarial export, and
    attack the hardened bundle with the identical configuration."""
    root = world["root"]
    pre = run_evaluation(base_bundle, world["eval_corpus"], root / "pre")

    augmented = root / "augmented.jsonl"
    rc = attack_cli(
        [
            "export-adv",
            "--target", str(base_bundle),
            "--corpus", str(world["train_corpus"]),
            "--out", str(augmented),
        ]
        + list(ATTACK_FLAGS)
    )
    assert rc == 0

    hardened_ckpt = root / "ckpt" / "hardened.ckpt"
    corpus = finetune_on_adversarial(world["classifier"], augmented, hardened_ckpt)
    hardened_bundle = root / "bundle-hardened"
    export_bundle(hardened_ckpt, world["mlm"], hardened_bundle, probe_sentences(32))
    post = run_evaluation(hardened_bundle, world["eval_corpus"], root / "post")

    return {
        "pre": pre,
        "post": post,
        "augmented": augmented,
        "augmented_rows": corpus,
        "hardened_ckpt": hardened_ckpt,
        "hardened_bundle": hardened_bundle,
    }
