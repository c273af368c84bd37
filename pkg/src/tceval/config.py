"""Harness configuration: constants, provider endpoints, precedence rules.

Precedence is CLI flags > TOML config file > built-in defaults.  The
effective configuration (secrets excluded; only env-var names are stored) is
echoed into output artifacts for provenance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import providers as prov
from .verifier import JUDGE_PREAMBLE

CACHE_DIR_ENV = "TCB_CACHE_DIR"


class ConfigError(Exception):
    pass


@dataclass
class Constants:
    fps: float = 8.0
    frames: int = 16
    sim_low: float = 0.90
    sim_high: float = 0.98
    w1: float = 2.0 / 3.0
    w2: float = 1.0 / 3.0
    completion_threshold: float = 3.66
    consistency_floor: float = 3.6
    divisive_spread: int = 3
    static_threshold: float = 1.0
    replicates: int = 5
    judge_preamble: str = JUDGE_PREAMBLE


@dataclass
class ProviderSettings:
    kind: str = "http"  # http | scripted | mock | local
    base_url: str = ""
    model: str = ""
    api_key_env: str = ""
    script: str = ""
    dim: int = 32
    rate_per_minute: int = 0
    max_in_flight: int = 4

    def fingerprint(self) -> str:
        if self.kind == "scripted":
            return f"scripted:{Path(self.script).name}" if self.script else "scripted"
        if self.kind == "mock":
            return f"mock-embed-{self.dim}"
        if self.kind == "local":
            return f"local:{self.model}"
        return self.model


@dataclass
class Config:
    constants: Constants = field(default_factory=Constants)
    llm: ProviderSettings = field(
        default_factory=lambda: ProviderSettings(api_key_env="TCB_LLM_API_KEY")
    )
    vlm: ProviderSettings = field(
        default_factory=lambda: ProviderSettings(api_key_env="TCB_VLM_API_KEY")
    )
    embedding: ProviderSettings = field(
        default_factory=lambda: ProviderSettings(
            kind="mock", api_key_env="TCB_EMBED_API_KEY"
        )
    )
    cache_dir: str = ""

    def resolved_cache_dir(self) -> Path:
        if self.cache_dir:
            return Path(self.cache_dir)
        env = os.environ.get(CACHE_DIR_ENV)
        if env:
            return Path(env)
        return Path(".tceval-cache")


def _apply(obj, values: dict, context: str) -> None:
    for key, value in values.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown {context} setting {key!r}")
        current = getattr(obj, key)
        if isinstance(current, bool):
            setattr(obj, key, bool(value))
        elif isinstance(current, int) and not isinstance(value, bool):
            setattr(obj, key, int(value))
        elif isinstance(current, float):
            setattr(obj, key, float(value))
        else:
            setattr(obj, key, str(value))


def load_config(path: Path | str | None = None, overrides: dict | None = None) -> Config:
    """Build a Config from defaults, then the TOML file, then overrides.

    ``overrides`` maps dotted names ("constants.frames", "providers.llm.model",
    "cache_dir") to values; unknown names are an error.
    """
    cfg = Config()
    if path is not None:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        constants = raw.get("constants", {})
        _apply(cfg.constants, constants, "constants")
        providers_tbl = raw.get("providers", {})
        for name in ("llm", "vlm", "embedding"):
            if name in providers_tbl:
                _apply(getattr(cfg, name), providers_tbl[name], f"providers.{name}")
        if "cache_dir" in raw:
            cfg.cache_dir = str(raw["cache_dir"])
    for dotted, value in (overrides or {}).items():
        parts = dotted.split(".")
        if parts == ["cache_dir"]:
            cfg.cache_dir = str(value)
        elif len(parts) == 2 and parts[0] == "constants":
            _apply(cfg.constants, {parts[1]: value}, "constants")
        elif len(parts) == 3 and parts[0] == "providers":
            if parts[1] not in ("llm", "vlm", "embedding"):
                raise ConfigError(f"unknown provider {parts[1]!r}")
            _apply(getattr(cfg, parts[1]), {parts[2]: value}, f"providers.{parts[1]}")
        else:
            raise ConfigError(f"unknown override {dotted!r}")
    return cfg


def config_to_dict(cfg: Config) -> dict:
    """Effective configuration for artifact provenance (no secrets)."""
    return {
        "constants": asdict(cfg.constants),
        "providers": {
            "llm": asdict(cfg.llm),
            "vlm": asdict(cfg.vlm),
            "embedding": asdict(cfg.embedding),
        },
    }


# ---------------------------------------------------------------------------
# Provider construction


def build_text_client(cfg: Config):
    s = cfg.llm
    if s.kind == "scripted":
        if not s.script:
            raise ConfigError("scripted llm provider needs providers.llm.script")
        return prov.ScriptedTextClient(prov.ScriptedResponses.from_file(s.script))
    if s.kind == "http":
        if not s.base_url or not s.model:
            raise ConfigError("http llm provider needs base_url and model")
        return prov.HttpChatClient(
            base_url=s.base_url,
            model=s.model,
            api_key_env=s.api_key_env or "TCB_LLM_API_KEY",
            rate_limiter=prov.RateLimiter(s.rate_per_minute or None),
        )
    raise ConfigError(f"unsupported llm provider kind {s.kind!r}")


def build_vision_client(cfg: Config):
    s = cfg.vlm
    if s.kind == "scripted":
        if not s.script:
            raise ConfigError("scripted vlm provider needs providers.vlm.script")
        return prov.ScriptedVisionClient(prov.ScriptedResponses.from_file(s.script))
    if s.kind == "http":
        if not s.base_url or not s.model:
            raise ConfigError("http vlm provider needs base_url and model")
        return prov.HttpVisionClient(
            base_url=s.base_url,
            model=s.model,
            api_key_env=s.api_key_env or "TCB_VLM_API_KEY",
            rate_limiter=prov.RateLimiter(s.rate_per_minute or None),
        )
    raise ConfigError(f"unsupported vlm provider kind {s.kind!r}")


def build_embedding_provider(cfg: Config):
    s = cfg.embedding
    if s.kind == "mock":
        return prov.MockEmbeddingProvider(dim=s.dim, fingerprint=f"mock-embed-{s.dim}")
    if s.kind == "local":
        return prov.LocalClipProvider(model_name=s.model or "openai/clip-vit-large-patch14-336")
    if s.kind == "http":
        if not s.base_url or not s.model:
            raise ConfigError("http embedding provider needs base_url and model")
        return prov.HttpEmbeddingProvider(
            base_url=s.base_url, model=s.model, api_key_env=s.api_key_env or "TCB_EMBED_API_KEY"
        )
    raise ConfigError(f"unsupported embedding provider kind {s.kind!r}")
