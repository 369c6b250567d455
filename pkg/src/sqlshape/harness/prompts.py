"""Prompt construction from the fixed template files.

Templates live as package data and are filled by literal placeholder
substitution only - no escaping, no reflow - so the exact prompt text is
auditable and reproducible byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from ..errors import EmptyInput

_DDL_SLOT = "{{ DDL_statements }}"
_QUESTION_SLOT = "{{ question }}"
_SQL_SLOT = "{{ sql }}"
_ERROR_SLOT = "{{ error_message }}"


@dataclass(frozen=True)
class PromptBundle:
    """System and user prompt pair for one generation request."""

    system: str
    user: str

    def as_messages(self) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.system},
            {"role": "user", "content": self.user},
        ]


def load_template(name: str) -> str:
    return (resources.files("sqlshape.harness") / "templates" / name).read_text(encoding="utf-8")


def build_prompts(ddl: str, question: str) -> PromptBundle:
    """Fill the system/user templates with the schema DDL and question."""
    if not ddl or not question:
        raise EmptyInput("both ddl and question are required")
    system = load_template("system.txt").replace(_DDL_SLOT, ddl)
    user = load_template("user.txt").replace(_QUESTION_SLOT, question)
    return PromptBundle(system=system, user=user)


def build_repair_prompt(sql: str, error_message: str) -> str:
    """Fill the repair template with the failing SQL and engine error."""
    if not sql or not error_message:
        raise EmptyInput("both sql and error_message are required")
    return load_template("repair.txt").replace(_SQL_SLOT, sql).replace(_ERROR_SLOT, error_message)
