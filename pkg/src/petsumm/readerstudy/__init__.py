"""Blinded review sessions: storage, session logic, HTTP API."""

from .service import (DEFAULT_DIMENSIONS, ReaderStudy, ReviewCase, StudyConfig,
                      ValidationFailure, cases_from_reports)
from .store import StudyStore
from .api import build_app, ServiceConfig

__all__ = [
    "DEFAULT_DIMENSIONS", "ReaderStudy", "ReviewCase", "StudyConfig",
    "StudyStore", "ValidationFailure", "cases_from_reports", "build_app",
    "ServiceConfig",
]
