from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from toy_models import build_bundle, eval_corpus  # noqa: E402


@pytest.fixture(scope="session")
def toy_bundle(tmp_path_factory) -> Path:
    """Trained TorchScript bundle shared by every desk-scale test."""
    return build_bundle(tmp_path_factory.mktemp("bundle") / "world1")


@pytest.fixture(scope="session")
def toy_eval_corpus():
    return eval_corpus(n=100, seed=13)
