"""HTTP service exposing scenario validation, runs, and the oracle suite."""
from .app import create_app

__all__ = ["create_app"]
