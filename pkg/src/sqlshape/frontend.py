"""Parsing front end: SQL text to a scoped query tree.

Built on sqlglot's tokenizer and parser (PostgreSQL dialect by default,
which covers the ANSI core plus the extensions the analyzed corpora use:
INTERVAL literals, CAST/``::``, CASE, EXISTS/IN subqueries, GROUPING and
ROLLUP, window functions, and set operations).  The tree exposed here is a
thin structural wrapper: one :class:`QueryNode` per SELECT core, with CTE
bodies, derived tables, predicate subqueries, and set-operation operands
attached as child nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import sqlglot
from sqlglot import exp
from sqlglot.errors import ErrorLevel, ParseError
from sqlglot.tokens import Tokenizer, TokenType

from .errors import MultipleStatements, ParseFailure, UnsupportedConstruct

DEFAULT_DIALECT = "postgres"

# Expression classes that open a new query scope.
QUERY_TYPES = (exp.Select, exp.SetOperation)

# FROM-clause constructs the analyzer cannot attribute features to.
# (UNPIVOT parses as a Pivot node with unpivot=True.)
_UNSUPPORTED_SOURCES = (exp.Lateral, exp.Unnest, exp.Values, exp.Pivot)

_SETOP_TAGS = {"Union": "UNION", "Intersect": "INTERSECT", "Except": "EXCEPT"}


def ident_name(identifier: exp.Identifier | None) -> str:
    """Case-normalized identifier text: lowercased unless double-quoted."""
    if identifier is None:
        return ""
    name = identifier.name
    if identifier.args.get("quoted"):
        return name
    return name.lower()


def _unwrap_query(expr: exp.Expression) -> exp.Expression:
    while isinstance(expr, (exp.Paren, exp.Subquery)) and expr.this is not None:
        if isinstance(expr, exp.Subquery) and expr.alias:
            break
        expr = expr.this
    return expr


def nested_queries(expr: exp.Expression) -> Iterator[exp.Expression]:
    """Yield each maximal query expression nested in ``expr``, in document
    order, without descending into the queries themselves."""
    for child in expr.iter_expressions():
        if isinstance(child, QUERY_TYPES):
            yield child
        else:
            yield from nested_queries(child)


def walk_non_query(expr: exp.Expression) -> Iterator[exp.Expression]:
    """Walk ``expr`` yielding every node, pruning at nested query scopes."""
    yield expr
    for child in expr.iter_expressions():
        if not isinstance(child, QUERY_TYPES):
            yield from walk_non_query(child)


@dataclass(eq=False)
class FromItem:
    """One entry of a FROM clause after sqlglot's flattening.

    Comma-separated relations arrive as ON-less joins, so ``join`` is None
    only for the first item; ``is_explicit_join`` distinguishes a written
    JOIN keyword (side/kind/ON present) from comma style.
    """

    expr: exp.Expression
    alias: str
    kind: str  # "table" | "derived"
    node: Optional["QueryNode"] = None  # derived-table body
    table: str = ""  # physical name as written, for kind="table"
    join: Optional[exp.Join] = None

    @property
    def is_explicit_join(self) -> bool:
        if self.join is None:
            return False
        a = self.join.args
        return bool(a.get("on") or a.get("using") or a.get("side") or a.get("kind"))


@dataclass(eq=False)
class QueryNode:
    """One SELECT core plus its place in the statement tree."""

    select: exp.Select
    parent: Optional["QueryNode"] = None
    origin: str = "root"  # root | cte | from | select | where | group | having | order | join | setop
    ctes: list[tuple[str, "QueryNode"]] = field(default_factory=list)
    from_items: list[FromItem] = field(default_factory=list)
    set_ops: list[tuple[str, "QueryNode"]] = field(default_factory=list)
    children: list["QueryNode"] = field(default_factory=list)

    @property
    def select_exprs(self) -> list[exp.Expression]:
        return list(self.select.expressions)

    @property
    def where_pred(self) -> Optional[exp.Expression]:
        where = self.select.args.get("where")
        return where.this if where is not None else None

    @property
    def group_items(self) -> list[exp.Expression]:
        group = self.select.args.get("group")
        if group is None:
            return []
        items = list(group.expressions)
        for key in ("rollup", "cube", "grouping_sets"):
            items.extend(group.args.get(key) or [])
        return items

    @property
    def having(self) -> Optional[exp.Expression]:
        having = self.select.args.get("having")
        return having.this if having is not None else None

    @property
    def order_items(self) -> list[exp.Expression]:
        order = self.select.args.get("order")
        return list(order.expressions) if order is not None else []

    @property
    def limit(self) -> Optional[exp.Expression]:
        return self.select.args.get("limit")

    def iter_nodes(self) -> Iterator["QueryNode"]:
        """This node and every descendant, parent always before child."""
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    def path(self) -> str:
        if self.parent is None:
            return "root"
        index = self.parent.children.index(self)
        return f"{self.parent.path()}.{self.origin}[{index}]"


@dataclass(eq=False)
class QueryTree:
    """A parsed single SQL statement.

    ``statement`` is the full sqlglot expression (kept for rendering);
    ``root`` is the leftmost SELECT core.  Set-operation operands hang off
    ``root.set_ops`` so that query nodes and SELECT cores stay one-to-one.
    """

    statement: exp.Expression
    root: QueryNode
    source_text: str
    dialect: str

    def nodes(self) -> list[QueryNode]:
        return list(self.root.iter_nodes())

    @property
    def cte_defs(self) -> list[tuple[str, QueryNode]]:
        return list(self.root.ctes)

    def sql(self, pretty: bool = False) -> str:
        return self.statement.sql(dialect=self.dialect, pretty=pretty)


def _offset_from_line_col(text: str, line: int, col: int) -> int:
    lines = text.split("\n")
    offset = sum(len(l) + 1 for l in lines[: max(line - 1, 0)])
    return min(offset + max(col - 1, 0), len(text))


def split_statements(text: str) -> list[str]:
    """Split a script into top-level statements on semicolons.

    Tokenizer-based, so semicolons inside string literals or comments do
    not split.  Empty statements (stray semicolons, trailing whitespace)
    are dropped.
    """
    try:
        tokens = Tokenizer().tokenize(text)
    except Exception as err:  # tokenizer errors carry no position info
        raise ParseFailure(str(err)) from err
    pieces: list[str] = []
    start = 0
    for token in tokens:
        if token.token_type == TokenType.SEMICOLON:
            pieces.append(text[start : token.start])
            start = token.end + 1
    pieces.append(text[start:])
    return [p.strip() for p in pieces if p.strip()]


def _check_supported(statement: exp.Expression, source: str) -> None:
    for node in statement.walk():
        if isinstance(node, exp.Command):
            name = str(node.this or "").strip() or "COMMAND"
            pos = source.upper().find(name.upper())
            raise UnsupportedConstruct(name.upper(), max(pos, 0))
        if isinstance(node, _UNSUPPORTED_SOURCES):
            name = type(node).__name__.upper()
            raise UnsupportedConstruct(name)


def _flatten_setops(expr: exp.SetOperation) -> tuple[list[exp.With], exp.Expression, list[tuple[str, exp.Expression]]]:
    """Flatten a left-deep set-operation chain into (WITHs, leftmost, followers)."""
    withs: list[exp.With] = []
    followers: list[tuple[str, exp.Expression]] = []
    cur: exp.Expression = expr
    while True:
        cur = _unwrap_query(cur)
        if not isinstance(cur, exp.SetOperation):
            break
        with_ = cur.args.get("with_")
        if with_ is not None:
            withs.append(with_)
        followers.append((_SETOP_TAGS.get(type(cur).__name__, "UNION"), cur.expression))
        cur = cur.this
    followers.reverse()
    return withs, cur, followers


class _TreeBuilder:
    def __init__(self, dialect: str):
        self.dialect = dialect

    def build(self, expr: exp.Expression, parent: Optional[QueryNode], origin: str) -> QueryNode:
        expr = _unwrap_query(expr)
        if isinstance(expr, exp.SetOperation):
            withs, leftmost, followers = _flatten_setops(expr)
            node = self.build(leftmost, parent, origin)
            # Statement-level WITH parses onto the set-op wrapper; its CTEs
            # belong to this region and must precede other children.
            cte_children: list[QueryNode] = []
            ctes: list[tuple[str, QueryNode]] = []
            for with_ in withs:
                for cte in with_.expressions:
                    body = self.build(cte.this, node, "cte")
                    ctes.append((ident_name(cte.args["alias"].this), body))
                    cte_children.append(body)
            node.ctes = ctes + node.ctes
            node.children = cte_children + node.children
            for tag, rexpr in followers:
                rnode = self.build(rexpr, node, "setop")
                node.set_ops.append((tag, rnode))
                node.children.append(rnode)
            return node
        if not isinstance(expr, exp.Select):
            raise UnsupportedConstruct(type(expr).__name__.upper())
        return self._build_select(expr, parent, origin)

    def _build_select(self, select: exp.Select, parent: Optional[QueryNode], origin: str) -> QueryNode:
        node = QueryNode(select=select, parent=parent, origin=origin)

        with_ = select.args.get("with_")
        if with_ is not None:
            for cte in with_.expressions:
                body = self.build(cte.this, node, "cte")
                node.ctes.append((ident_name(cte.args["alias"].this), body))
                node.children.append(body)

        for item in select.expressions:
            self._attach_nested(item, node, "select")

        from_ = select.args.get("from_")
        if from_ is not None:
            node.from_items.append(self._from_item(from_.this, node, join=None))
        for join in select.args.get("joins") or []:
            node.from_items.append(self._from_item(join.this, node, join=join))
            on = join.args.get("on")
            if on is not None:
                self._attach_nested(on, node, "join")

        for key in ("where", "group", "having", "qualify", "order"):
            arg = select.args.get(key)
            if arg is not None:
                self._attach_nested(arg, node, key)

        return node

    def _from_item(self, expr: exp.Expression, node: QueryNode, join: Optional[exp.Join]) -> FromItem:
        if isinstance(expr, exp.Table):
            return FromItem(
                expr=expr,
                alias=ident_name(expr.args.get("alias")) or ident_name(expr.this),
                kind="table",
                table=ident_name(expr.this),
                join=join,
            )
        if isinstance(expr, (exp.Subquery, exp.Paren)):
            inner = _unwrap_query(expr.this)
            if isinstance(inner, QUERY_TYPES):
                child = self.build(inner, node, "from")
                node.children.append(child)
                alias = expr.alias if isinstance(expr, exp.Subquery) else ""
                return FromItem(expr=expr, alias=alias.lower(), kind="derived", node=child, join=join)
        raise UnsupportedConstruct(type(expr).__name__.upper())

    def _attach_nested(self, expr: exp.Expression, node: QueryNode, origin: str) -> None:
        for sub in nested_queries(expr):
            child = self.build(sub, node, origin)
            node.children.append(child)


def parse(sql_text: str, dialect: str = DEFAULT_DIALECT) -> QueryTree:
    """Parse one SQL query statement into a :class:`QueryTree`.

    Raises :class:`ParseFailure` with a byte offset on syntax errors,
    :class:`MultipleStatements` if the text holds more than one statement,
    and :class:`UnsupportedConstruct` for non-query statements or FROM
    constructs outside the analyzed subset.
    """
    if len(split_statements(sql_text)) > 1:
        raise MultipleStatements("expected exactly one statement")
    try:
        statement = sqlglot.parse_one(sql_text, read=dialect, error_level=ErrorLevel.RAISE)
    except ParseError as err:
        info = err.errors[0] if err.errors else {}
        offset = _offset_from_line_col(sql_text, info.get("line", 1), info.get("col", 1))
        raise ParseFailure(str(err), offset=offset, expected=info.get("description", "")) from err
    if statement is None:
        raise ParseFailure("empty statement")

    query = _unwrap_query(statement)
    if not isinstance(query, QUERY_TYPES):
        raise UnsupportedConstruct(type(query).__name__.upper())
    _check_supported(statement, sql_text)

    root = _TreeBuilder(dialect).build(query, None, "root")
    return QueryTree(statement=statement, root=root, source_text=sql_text, dialect=dialect)


def parse_script(text: str, dialect: str = DEFAULT_DIALECT) -> list[QueryTree]:
    """Parse a multi-statement script, one QueryTree per statement."""
    return [parse(stmt, dialect) for stmt in split_statements(text)]


def enumerate_subqueries(tree: QueryTree) -> list[QueryNode]:
    """Every proper descendant query node of the root, pre-order.

    Covers subqueries in FROM, WHERE, SELECT expressions, HAVING, CTE
    bodies, and set-operation operands; the list is closed under descent.
    """
    return tree.nodes()[1:]
