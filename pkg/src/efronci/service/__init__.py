"""HTTP service wrapping the confidence-interval procedures."""

from .app import app

__all__ = ["app"]
