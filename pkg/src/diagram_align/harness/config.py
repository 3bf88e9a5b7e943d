"""Run settings loaded from a YAML or JSON file."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..alignment import MatchConfig, PathMode
from ..errors import ConfigError
from ..model.backends import ModelEndpointConfig
from ..model.prompts import DEFAULT_DIAGRAM_TYPE, DEFAULT_DIAGRAM_TYPE_NAME
from ..model.render import DEFAULT_RENDERER, renderer_command
from ..svg import ExtractionConfig


@dataclass(frozen=True)
class Settings:
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    matching: MatchConfig = field(default_factory=MatchConfig)
    endpoint: ModelEndpointConfig = field(default_factory=ModelEndpointConfig)
    renderer: tuple[str, ...] = DEFAULT_RENDERER
    render_timeout: float = 120.0
    parallelism: int = 4
    failure_threshold: float = 0.5
    exclude_degenerate: bool = False
    backoff_base: float = 2.0
    diagram_type_name: str = DEFAULT_DIAGRAM_TYPE_NAME
    diagram_type: str = DEFAULT_DIAGRAM_TYPE

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if not 0.0 <= self.failure_threshold <= 1.0:
            raise ValueError("failure_threshold must lie in [0, 1]")


_EXTRACTION_KEYS = {"k_y", "tau_overlap", "default_font_size"}
_MATCH_KEYS = {"similarity_threshold", "path_mode"}
_TOP_KEYS = {
    "renderer",
    "render_timeout",
    "parallelism",
    "failure_threshold",
    "exclude_degenerate",
    "backoff_base",
    "diagram_type_name",
    "diagram_type",
}


def settings_from_mapping(doc: Mapping[str, Any]) -> Settings:
    unknown = set(doc) - _EXTRACTION_KEYS - _MATCH_KEYS - _TOP_KEYS - {"endpoint"}
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
    try:
        extraction = ExtractionConfig(**{k: float(doc[k]) for k in _EXTRACTION_KEYS if k in doc})
        match_kwargs: dict[str, Any] = {}
        if "similarity_threshold" in doc:
            match_kwargs["similarity_threshold"] = float(doc["similarity_threshold"])
        if "path_mode" in doc:
            match_kwargs["path_mode"] = PathMode(doc["path_mode"])
        matching = MatchConfig(**match_kwargs)

        endpoint_doc = doc.get("endpoint") or {}
        if not isinstance(endpoint_doc, Mapping):
            raise ConfigError("'endpoint' must be a mapping")
        allowed = {f.name for f in fields(ModelEndpointConfig)}
        bad = set(endpoint_doc) - allowed
        if bad:
            raise ConfigError(f"unknown endpoint key(s): {', '.join(sorted(bad))}")
        endpoint = ModelEndpointConfig(**endpoint_doc)

        top = {k: doc[k] for k in _TOP_KEYS if k in doc}
        if "renderer" in top:
            top["renderer"] = renderer_command(top["renderer"])
        return Settings(extraction=extraction, matching=matching, endpoint=endpoint, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_settings(path: str | Path | None) -> Settings:
    if path is None:
        return Settings()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ConfigError(f"config {path} must contain a mapping")
    return settings_from_mapping(doc)
