"""Generation loop: prompt, validate, repair, retry.

One record's attempts are strictly sequential (each repair prompt embeds
the previous attempt's SQL and error verbatim); distinct questions may
run concurrently.  The retry convention - one initial attempt plus at
most ``max_retries`` repairs - is stamped into every record's metadata so
results stay interpretable.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..errors import LlmUnavailable, ValidatorUnavailable
from .clients import ChatClient, ValidatorClient, extract_sql
from .prompts import PromptBundle, build_prompts, build_repair_prompt


@dataclass(frozen=True)
class Attempt:
    sql: str
    error: Optional[str]  # None when the validator accepted


@dataclass
class GenerationRecord:
    """Outcome of one question: full attempt transcript plus verdict."""

    query_id: str
    model: str
    attempts: list[Attempt] = field(default_factory=list)
    success: bool = False
    final_sql: Optional[str] = None
    failure: Optional[str] = None  # non-retryable failure reason, if any
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "model": self.model,
            "attempts": [{"sql": a.sql, "error": a.error} for a in self.attempts],
            "success": self.success,
            "final_sql": self.final_sql,
            "failure": self.failure,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


@dataclass
class SuccessTable:
    """Per-model success counts: model -> (successes, total)."""

    rows: dict[str, tuple[int, int]]

    def render(self, model: str) -> str:
        successes, total = self.rows[model]
        return f"{successes} out of {total}"


def generate_with_retry(
    llm: ChatClient,
    validator: ValidatorClient,
    prompts: PromptBundle,
    max_retries: int = 3,
    query_id: str = "",
    model: str = "",
    sampling: Optional[dict] = None,
) -> GenerationRecord:
    """Run the generate/validate/repair loop for one question.

    Attempt 1 sends the prompt bundle; each subsequent attempt appends the
    previous assistant reply and a repair prompt built from its SQL and
    the validator's error text.  Stops at the first accepted statement or
    after ``max_retries`` repairs.  An unreachable LLM or validator marks
    the record failed without consuming retries.
    """
    record = GenerationRecord(
        query_id=query_id,
        model=model,
        metadata={
            "max_retries": max_retries,
            "retry_convention": "1 initial attempt + max_retries repairs",
            "sampling": dict(sampling or {}),
        },
    )
    messages = prompts.as_messages()
    for attempt_index in range(max_retries + 1):
        try:
            raw = llm.complete(messages)
        except LlmUnavailable as err:
            record.failure = f"llm unavailable: {err}"
            return record
        sql = extract_sql(raw)
        try:
            error = validator.validate(sql)
        except ValidatorUnavailable as err:
            record.failure = f"validator unavailable: {err}"
            return record
        record.attempts.append(Attempt(sql=sql, error=error))
        if error is None:
            record.success = True
            record.final_sql = sql
            return record
        if attempt_index < max_retries:
            messages = messages + [
                {"role": "assistant", "content": sql},
                {"role": "user", "content": build_repair_prompt(sql, error)},
            ]
    return record


def run_manifest(
    entries: Iterable[tuple[str, str]],
    ddl: str,
    llm: ChatClient,
    validator: ValidatorClient,
    max_retries: int = 3,
    parallelism: int = 1,
    model: str = "",
    sampling: Optional[dict] = None,
) -> list[GenerationRecord]:
    """Generate one record per (query_id, question); output sorted by id.

    ``parallelism`` > 1 requires thread-safe clients; scripted clients
    should run sequentially to keep transcripts deterministic.
    """
    jobs = [(query_id, build_prompts(ddl, question)) for query_id, question in entries]

    def run(job: tuple[str, PromptBundle]) -> GenerationRecord:
        query_id, prompts = job
        return generate_with_retry(
            llm,
            validator,
            prompts,
            max_retries=max_retries,
            query_id=query_id,
            model=model,
            sampling=sampling,
        )

    if parallelism <= 1:
        records = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(run, jobs))
    return sorted(records, key=lambda r: r.query_id)


def success_table(records: Iterable[GenerationRecord]) -> SuccessTable:
    """Tally successes per model over the given records."""
    rows: dict[str, list[int]] = {}
    for record in records:
        successes, total = rows.setdefault(record.model, [0, 0])
        rows[record.model][0] = successes + (1 if record.success else 0)
        rows[record.model][1] = total + 1
    return SuccessTable(rows={model: (s, t) for model, (s, t) in sorted(rows.items())})
