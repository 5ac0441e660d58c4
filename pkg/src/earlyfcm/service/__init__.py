"""HTTP front end for the early-stopped clustering pipeline."""

from .app import create_app

__all__ = ["create_app"]
