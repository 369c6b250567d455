"""Harness configuration: TOML file plus environment for the API key."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from ..schema import SchemaCatalog
from .clients import (
    CatalogValidator,
    ChatClient,
    HttpChatClient,
    PostgresValidator,
    ScriptedChatClient,
    ScriptedValidator,
    ValidatorClient,
)


@dataclass
class HarnessConfig:
    llm_kind: str = "http"  # http | scripted
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "SQLSHAPE_API_KEY"
    sampling: dict = field(default_factory=dict)
    responses_file: str = ""  # scripted llm

    validator_kind: str = "catalog"  # catalog | postgres | scripted
    dsn: str = ""
    validate_mode: str = "execute"  # postgres: execute | plan
    row_limit: int = 1
    script_file: str = ""  # scripted validator

    max_retries: int = 3
    parallelism: int = 1


def load_config(path: str | Path) -> HarnessConfig:
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    llm = data.get("llm", {})
    validator = data.get("validator", {})
    run = data.get("run", {})
    return HarnessConfig(
        llm_kind=llm.get("kind", "http"),
        endpoint=llm.get("endpoint", ""),
        model=llm.get("model", ""),
        api_key_env=llm.get("api_key_env", "SQLSHAPE_API_KEY"),
        sampling=dict(llm.get("sampling", {})),
        responses_file=llm.get("responses_file", ""),
        validator_kind=validator.get("kind", "catalog"),
        dsn=validator.get("dsn", ""),
        validate_mode=validator.get("mode", "execute"),
        row_limit=int(validator.get("row_limit", 1)),
        script_file=validator.get("script_file", ""),
        max_retries=int(run.get("max_retries", 3)),
        parallelism=int(run.get("parallelism", 1)),
    )


def build_llm_client(config: HarnessConfig, base_dir: Path | None = None) -> ChatClient:
    if config.llm_kind == "scripted":
        path = Path(config.responses_file)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        responses = json.loads(path.read_text(encoding="utf-8"))
        return ScriptedChatClient(responses)
    if config.llm_kind == "http":
        if not config.endpoint or not config.model:
            raise ValueError("http llm requires endpoint and model in [llm]")
        return HttpChatClient(
            endpoint=config.endpoint,
            model=config.model,
            api_key_env=config.api_key_env,
            sampling=config.sampling,
        )
    raise ValueError(f"unknown llm kind {config.llm_kind!r}")


def build_validator_client(
    config: HarnessConfig,
    catalog: SchemaCatalog,
    base_dir: Path | None = None,
) -> ValidatorClient:
    if config.validator_kind == "catalog":
        return CatalogValidator(catalog)
    if config.validator_kind == "postgres":
        if not config.dsn:
            raise ValueError("postgres validator requires dsn in [validator]")
        return PostgresValidator(config.dsn, mode=config.validate_mode, row_limit=config.row_limit)
    if config.validator_kind == "scripted":
        path = Path(config.script_file)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        errors = json.loads(path.read_text(encoding="utf-8"))
        return ScriptedValidator(errors)
    raise ValueError(f"unknown validator kind {config.validator_kind!r}")
