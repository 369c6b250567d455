"""LLM SQL-generation harness: prompts, clients, and the retry loop."""

from .clients import (
    CatalogValidator,
    ChatClient,
    HttpChatClient,
    PostgresValidator,
    ScriptedChatClient,
    ScriptedValidator,
    ValidatorClient,
    extract_sql,
)
from .config import HarnessConfig, build_llm_client, build_validator_client, load_config
from .prompts import PromptBundle, build_prompts, build_repair_prompt, load_template
from .runner import Attempt, GenerationRecord, SuccessTable, generate_with_retry, run_manifest, success_table

__all__ = [
    "Attempt",
    "CatalogValidator",
    "ChatClient",
    "GenerationRecord",
    "HarnessConfig",
    "HttpChatClient",
    "PostgresValidator",
    "PromptBundle",
    "ScriptedChatClient",
    "ScriptedValidator",
    "SuccessTable",
    "ValidatorClient",
    "build_llm_client",
    "build_prompts",
    "build_repair_prompt",
    "build_validator_client",
    "extract_sql",
    "generate_with_retry",
    "load_config",
    "load_template",
    "run_manifest",
    "success_table",
]
