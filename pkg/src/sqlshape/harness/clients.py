"""LLM and validator client implementations.

Chat clients implement ``complete(messages) -> str``; validator clients
implement ``validate(sql) -> None | error text``.  Shipped chat clients:
a generic HTTP chat-completions client (any OpenAI-compatible endpoint;
no vendor SDK) and a deterministic scripted client for tests and dry
runs.  Shipped validators: a scripted mock, a catalog validator that
syntax- and schema-checks with this package's own frontend, and a
PostgreSQL validator that plan-checks or executes against a live engine.
"""
from __future__ import annotations

import json
import os
from typing import Callable, Iterable, Optional, Protocol

from ..errors import LlmUnavailable, SqlShapeError, ValidatorUnavailable
from ..frontend import DEFAULT_DIALECT, parse
from ..resolve import resolve
from ..schema import SchemaCatalog

Message = dict[str, str]


class ChatClient(Protocol):
    def complete(self, messages: list[Message]) -> str: ...


class ValidatorClient(Protocol):
    def validate(self, sql: str) -> Optional[str]: ...


def extract_sql(response: str) -> str:
    """Strip a markdown code fence if the model wrapped its answer in one."""
    text = response.strip()
    if text.startswith("```"):
        first_newline = text.find("\n")
        if first_newline != -1 and text.endswith("```"):
            text = text[first_newline + 1 : -3].strip()
    return text


class ScriptedChatClient:
    """Replays a fixed list of responses; deterministic by construction."""

    def __init__(self, responses: Iterable[str]):
        self.responses = list(responses)
        self.calls: list[list[Message]] = []

    def complete(self, messages: list[Message]) -> str:
        self.calls.append([dict(m) for m in messages])
        if len(self.calls) > len(self.responses):
            raise LlmUnavailable("scripted client ran out of responses")
        return self.responses[len(self.calls) - 1]


class HttpChatClient:
    """Minimal chat-completions client for OpenAI-compatible endpoints.

    The API key is read from ``api_key_env`` at call time; sampling
    parameters are passed through verbatim and recorded by the runner.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "SQLSHAPE_API_KEY",
        timeout: float = 120.0,
        sampling: Optional[dict] = None,
        session=None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.sampling = dict(sampling or {})
        self._session = session

    def _post(self, payload: dict) -> dict:
        if self._session is None:
            import requests

            self._session = requests.Session()
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        response = self._session.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        response.raise_for_status()
        return response.json()

    def complete(self, messages: list[Message]) -> str:
        payload = {"model": self.model, "messages": messages, **self.sampling}
        try:
            data = self._post(payload)
            return data["choices"][0]["message"]["content"]
        except Exception as err:
            raise LlmUnavailable(f"chat completion failed: {err}") from err


class ScriptedValidator:
    """Maps SQL text to a scripted error (or None); unlisted SQL passes."""

    def __init__(self, errors: dict[str, str] | None = None, default_ok: bool = True):
        self.errors = dict(errors or {})
        self.default_ok = default_ok
        self.calls: list[str] = []

    def validate(self, sql: str) -> Optional[str]:
        self.calls.append(sql)
        if sql in self.errors:
            return self.errors[sql]
        if not self.default_ok:
            return "validation refused by script"
        return None


class CatalogValidator:
    """Offline validator: accepts a statement when it parses and every
    relation and column reference resolves against the catalog.

    Error texts mimic engine phrasing ('relation "x" does not exist') so
    repair prompts read naturally without a live database.
    """

    def __init__(self, catalog: SchemaCatalog, dialect: str = DEFAULT_DIALECT):
        self.catalog = catalog
        self.dialect = dialect

    def validate(self, sql: str) -> Optional[str]:
        if not sql.strip():
            return "empty statement"
        try:
            tree = parse(sql, dialect=self.dialect)
        except SqlShapeError as err:
            return str(err)
        resolve(tree, self.catalog)
        assert tree.resolution is not None
        for node in tree.nodes():
            for source in tree.resolution.sources(node):
                if source.kind == "table" and not self.catalog.has_table(source.table):
                    return f'relation "{source.table}" does not exist'
        if tree.resolution.unresolved:
            _, name = tree.resolution.unresolved[0]
            return f'column "{name}" does not exist'
        return None


class PostgresValidator:
    """Validates against a live PostgreSQL engine.

    ``mode="plan"`` runs EXPLAIN (accept + plan); ``mode="execute"`` runs
    the statement wrapped in a LIMIT subquery inside a transaction that is
    always rolled back (catches runtime errors the planner misses).
    Requires the psycopg or psycopg2 driver; a ``connection_factory`` can
    inject any DB-API connection (used by the tests).
    """

    def __init__(
        self,
        dsn: str,
        mode: str = "execute",
        row_limit: int = 1,
        connection_factory: Optional[Callable[[], object]] = None,
    ):
        if mode not in ("plan", "execute"):
            raise ValueError("mode must be 'plan' or 'execute'")
        self.dsn = dsn
        self.mode = mode
        self.row_limit = row_limit
        self._connection_factory = connection_factory

    def _connect(self):
        if self._connection_factory is not None:
            return self._connection_factory()
        try:
            try:
                import psycopg  # psycopg 3

                return psycopg.connect(self.dsn)
            except ImportError:
                import psycopg2

                return psycopg2.connect(self.dsn)
        except ImportError as err:
            raise ValidatorUnavailable("no PostgreSQL driver installed (psycopg/psycopg2)") from err
        except Exception as err:
            raise ValidatorUnavailable(f"cannot connect to engine: {err}") from err

    def validate(self, sql: str) -> Optional[str]:
        statement = sql.strip().rstrip(";")
        if not statement:
            return "empty statement"
        if self.mode == "plan":
            probe = f"EXPLAIN {statement}"
        else:
            probe = f"SELECT * FROM ({statement}) AS _probe LIMIT {self.row_limit}"
        connection = self._connect()
        try:
            cursor = connection.cursor()
            try:
                cursor.execute(probe)
                return None
            except Exception as err:  # engine error text goes back verbatim
                return str(err).strip()
            finally:
                cursor.close()
        finally:
            try:
                connection.rollback()
            finally:
                connection.close()
