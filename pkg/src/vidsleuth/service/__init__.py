"""Service layer: orchestration, persistence, posting policy, HTTP API."""

from .config import AppConfig, load_config
from .core import SleuthService
from .pipeline import PipelineDeps, RunOptions, build_deps, run_pipeline
from .posting import (
    PlatformPoster,
    PostingPolicy,
    PostOutcome,
    PostQueue,
    PostState,
    QueueEntry,
    strip_urls,
)
from .runs import RunRecord, RunStatus, RunStore

__all__ = [
    "AppConfig",
    "load_config",
    "SleuthService",
    "PipelineDeps",
    "RunOptions",
    "build_deps",
    "run_pipeline",
    "PlatformPoster",
    "PostingPolicy",
    "PostOutcome",
    "PostQueue",
    "PostState",
    "QueueEntry",
    "strip_urls",
    "RunRecord",
    "RunStatus",
    "RunStore",
]
