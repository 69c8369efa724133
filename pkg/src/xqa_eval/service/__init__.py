"""HTTP service layer: rating sessions plus batch evaluation endpoints."""

from .app import create_app, run_calibrate, run_evaluate, run_extract, run_split
from .sessions import (
    DEFAULT_CRITERIA,
    RatingSession,
    SessionConfig,
    SessionManager,
    SessionTask,
    build_tasks,
)

__all__ = [
    "DEFAULT_CRITERIA",
    "RatingSession",
    "SessionConfig",
    "SessionManager",
    "SessionTask",
    "build_tasks",
    "create_app",
    "run_calibrate",
    "run_evaluate",
    "run_extract",
    "run_split",
]
