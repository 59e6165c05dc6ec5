from textscale.service.app import create_app
from textscale.service.jobs import JobRunner
from textscale.service.store import Store

__all__ = ["create_app", "JobRunner", "Store"]
