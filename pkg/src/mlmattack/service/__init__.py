"""HTTP service exposing the model protocol and the attack engine."""

from .app import create_app

__all__ = ["create_app"]
