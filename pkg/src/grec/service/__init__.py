"""HTTP service wrapping the toolkit for multi-client use."""

from .app import ServiceConfig, create_app

__all__ = ["ServiceConfig", "create_app"]
