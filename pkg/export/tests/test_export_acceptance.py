"""End-to-end acceptance gate for the export toolkit.

Each test prints one PASS/FAIL line with the measured numbers so a log
scan shows how every criterion fared.
"""

from __future__ import annotations

from mlmattack.backends.torchscript import load_bundle
from mlmexport.manifest import BundleManifest
from mlmexport.models import classify, load_checkpoint
from mlmexport.world import probe_sentences


def check(ok: bool, line: str) -> None:
    print(("PASS: " if ok else "FAIL: ") + line)
    assert ok, line


def test_s01_exported_bundle_matches_source_logits_on_probes(world, base_bundle):
    """The engine-loaded bundle reproduces the source models' classifier
    logits within 1e-3 max-abs over 32 probe sentences."""
    classifier, meta = load_checkpoint(world["classifier"])
    gateway = load_bundle(base_bundle)
    probes = probe_sentences(32)
    worst = 0.0
    for text in probes:
        source = classify(classifier, meta["tokens"], text)
        engine = gateway.raw_classify(text).values
        worst = max(worst, max(abs(a - b) for a, b in zip(source, engine)))
    recorded = BundleManifest.load(base_bundle).parity
    check(
        worst <= 1e-3 and recorded.verified and recorded.n_probes == 32,
        f"bundle parity: engine vs source max |logit diff| {worst:.2e} <= 1e-3 "
        f"over {len(probes)} probes (manifest: {recorded.status}, "
        f"{recorded.max_abs_logit_diff:.2e})",
    )


def test_s02_adversarial_finetune_raises_attacked_accuracy(finetune_cycle):
    """Fine-tuning on the engine's adversarial export, then re-running the
    identical attack: attacked accuracy strictly higher, clean accuracy
    within 2 points of the base model."""
    pre, post = finetune_cycle["pre"], finetune_cycle["post"]
    rise_ok = post["attacked_accuracy"] > pre["attacked_accuracy"]
    clean_drop = pre["original_accuracy"] - post["original_accuracy"]
    check(
        rise_ok and clean_drop <= 0.02,
        "adversarial fine-tune: attacked accuracy "
        f"{pre['attacked_accuracy']:.3f} -> {post['attacked_accuracy']:.3f} "
        f"(strictly higher: {rise_ok}), clean accuracy "
        f"{pre['original_accuracy']:.3f} -> {post['original_accuracy']:.3f} "
        f"(drop {clean_drop:+.3f} <= 0.02)",
    )
