"""Concrete model backends: in-process TorchScript graphs, a remote HTTP
service, and a lightweight deterministic sentence-embedding stand-in."""

from .similarity import HashedBowEmbedding
from .torchscript import TorchscriptClassifier, TorchscriptMlm, bundle_checksums, load_bundle

__all__ = [
    "HashedBowEmbedding",
    "TorchscriptClassifier",
    "TorchscriptMlm",
    "bundle_checksums",
    "load_bundle",
]
