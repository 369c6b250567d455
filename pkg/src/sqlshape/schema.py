"""Schema catalog: table/column inventory parsed from CREATE TABLE DDL.

The catalog drives alias and star resolution and supplies the schema text
for generation prompts.  Only names matter for resolution; declared types
are recorded but never interpreted.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import sqlglot
from sqlglot import exp
from sqlglot.errors import ErrorLevel, ParseError

from .errors import DuplicateTable, ParseFailure
from .frontend import DEFAULT_DIALECT, ident_name, split_statements


@dataclass(frozen=True)
class SchemaCatalog:
    """Immutable table -> ordered column list mapping.

    Table and column names are case-normalized (lowercased unless the DDL
    double-quoted them).  ``source_hash`` fingerprints the DDL text the
    catalog was built from.
    """

    tables: dict[str, list[str]] = field(default_factory=dict)
    column_types: dict[tuple[str, str], str] = field(default_factory=dict)
    source_hash: str = ""

    def __post_init__(self):
        index: dict[str, list[str]] = {}
        for table, columns in self.tables.items():
            for column in columns:
                index.setdefault(column, []).append(table)
        object.__setattr__(self, "_column_index", index)

    def __bool__(self) -> bool:
        return bool(self.tables)

    def has_table(self, name: str) -> bool:
        return name in self.tables

    def columns(self, table: str) -> list[str]:
        return list(self.tables.get(table, []))

    def has_column(self, table: str, column: str) -> bool:
        return column in self.tables.get(table, ())

    def tables_with_column(self, column: str) -> list[str]:
        """All catalog tables declaring ``column``, in ingestion order."""
        return list(self._column_index.get(column, []))  # type: ignore[attr-defined]

    def to_json(self) -> str:
        payload = {table: columns for table, columns in sorted(self.tables.items())}
        return json.dumps(payload, indent=2, sort_keys=True)


EMPTY_CATALOG = SchemaCatalog()


def ingest_ddl(ddl_text: str, dialect: str = DEFAULT_DIALECT) -> SchemaCatalog:
    """Build a :class:`SchemaCatalog` from a sequence of CREATE TABLE statements.

    Statements other than CREATE TABLE are ignored; redefining a table
    raises :class:`DuplicateTable`.  An empty string yields an empty
    catalog (schemaless mode downstream).
    """
    tables: dict[str, list[str]] = {}
    column_types: dict[tuple[str, str], str] = {}
    for statement_text in split_statements(ddl_text):
        try:
            statement = sqlglot.parse_one(statement_text, read=dialect, error_level=ErrorLevel.RAISE)
        except ParseError as err:
            raise ParseFailure(f"bad DDL statement: {err}") from err
        if not isinstance(statement, exp.Create) or (statement.args.get("kind") or "").upper() != "TABLE":
            continue
        schema = statement.this
        if isinstance(schema, exp.Schema):
            table_expr = schema.this
            column_defs = [e for e in schema.expressions if isinstance(e, exp.ColumnDef)]
        else:
            table_expr = schema
            column_defs = []
        if not isinstance(table_expr, exp.Table):
            raise ParseFailure(f"unrecognized CREATE TABLE target: {statement_text[:80]}")
        table = ident_name(table_expr.this)
        if table in tables:
            raise DuplicateTable(table)
        columns: list[str] = []
        for column_def in column_defs:
            name = ident_name(column_def.this)
            columns.append(name)
            kind = column_def.args.get("kind")
            if kind is not None:
                column_types[(table, name)] = kind.sql()
        tables[table] = columns
    digest = hashlib.sha256(ddl_text.encode("utf-8")).hexdigest()
    return SchemaCatalog(tables=tables, column_types=column_types, source_hash=digest)
