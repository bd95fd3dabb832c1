"""Operator configuration, loaded from a YAML file (path via flag or env)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

CONFIG_ENV_VAR = "VIDSLEUTH_CONFIG"


@dataclass
class AppConfig:
    data_dir: str = "data"
    corpus_dirs: dict[str, str] = field(default_factory=dict)
    prompt_templates_dir: str | None = None

    # model
    provider: str = "gemini"
    model_name: str = "gemini-1.5-flash"
    model_api_key_env: str = "GEMINI_API_KEY"

    # platform
    platform_api_key_env: str = "YOUTUBE_API_KEY"
    comment_limit: int = 50
    preferred_language: str = "en"

    # retrieval
    retrieval_k: int = 3
    cache_dir: str | None = None
    cache_ttl_s: float = 24 * 3600
    search_api_key_env: str = "SEARCH_API_KEY"
    search_engine_id_env: str = "SEARCH_ENGINE_ID"
    factcheck_api_key_env: str = "FACTCHECK_API_KEY"

    # posting policy defaults
    strip_urls: bool = True
    min_interval_hours: float = 4.0
    max_posts_per_day: int = 4
    disclose_first_post: bool = True
    disclosure_text: str | None = None


def load_config(path: str | Path | None = None) -> AppConfig:
    """Load config from ``path``, $VIDSLEUTH_CONFIG, or defaults."""
    if path is None:
        env_path = os.environ.get(CONFIG_ENV_VAR)
        path = Path(env_path) if env_path else None
    config = AppConfig()
    if path is None:
        return config
    raw: Any = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    known = {f.name for f in fields(AppConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, value in raw.items():
        setattr(config, key, value)
    return config
