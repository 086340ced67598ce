"""Building AttackConfig values from JSON-ish dicts (config files, HTTP
bodies, CLI overrides), with strict unknown-key rejection."""

from __future__ import annotations

from dataclasses import fields, replace

from .candidates import SubwordSearchConfig
from .engine import AttackConfig, SimGate
from .errors import ConfigError
from .importance import RankingMode

ATTACK_FIELDS = frozenset(f.name for f in fields(AttackConfig))


def attack_config_from_dict(data: dict, base: AttackConfig | None = None) -> AttackConfig:
    """Overlay ``data`` onto ``base`` (default config when omitted)."""
    if base is None:
        base = AttackConfig()
    unknown = sorted(set(data) - ATTACK_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key == "ranking_mode" and not isinstance(value, RankingMode):
            try:
                value = RankingMode(str(value).lower())
            except ValueError as exc:
                raise ConfigError(f"unknown ranking mode {value!r}") from exc
        elif key == "sim_gate" and not isinstance(value, SimGate):
            try:
                value = SimGate(str(value).lower())
            except ValueError as exc:
                raise ConfigError(f"unknown sim gate {value!r}") from exc
        elif key == "subword" and isinstance(value, dict):
            unknown_sub = sorted(
                set(value) - {f.name for f in fields(SubwordSearchConfig)}
            )
            if unknown_sub:
                raise ConfigError(f"unknown subword fields: {', '.join(unknown_sub)}")
            try:
                value = SubwordSearchConfig(**value)
            except (TypeError, AssertionError) as exc:
                raise ConfigError(f"bad subword settings: {exc}") from exc
        kwargs[key] = value
    try:
        return replace(base, **kwargs)
    except (TypeError, AssertionError) as exc:
        raise ConfigError(str(exc)) from exc
