"""Alias, CTE, and star resolution against a schema catalog.

Every column reference in a parsed tree is annotated with the set of
physical ``table.column`` identities it denotes.  Plain references map to
singleton sets; references through CTE or derived-table output columns
resolve transitively to the base columns the defining expression mentions
(an expression-valued output maps to every base column it uses).  When a
reference cannot be attributed, it gets a scope-unique sentinel table and
``resolved=False`` instead of an error, so feature extraction stays total
over heterogeneous corpora.

Lookup rules, in precedence order, for a bare column name:

1. the unique in-scope source known (via catalog or computed outputs) to
   contain the column; several such sources raise ``AmbiguousColumn`` in
   strict mode and fall through to a sentinel in lenient mode;
2. in GROUP BY / HAVING / ORDER BY position, a select-item alias of the
   same query;
3. the same search one scope outward (correlated reference);
4. schemaless fallback: a single uncataloged FROM table claims the column;
5. sentinel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from sqlglot import exp

from .errors import AmbiguousColumn
from .frontend import QUERY_TYPES, FromItem, QueryNode, QueryTree, ident_name
from .schema import EMPTY_CATALOG, SchemaCatalog

CanonSet = frozenset["CanonicalColumn"]

_EMPTY: CanonSet = frozenset()

# Contexts where select-item aliases and ordinals may be referenced.
_ALIAS_CONTEXTS = {"group", "having", "order"}


@dataclass(frozen=True, order=True)
class CanonicalColumn:
    """A column reference rewritten to its physical table.column identity.

    Equality and ordering use only the two name fields; ``resolved`` is
    bookkeeping (True only when the pair exists in the catalog).
    """

    table: str
    column: str
    resolved: bool = field(default=True, compare=False)

    def __str__(self) -> str:
        return f"{self.table}.{self.column}"


@dataclass(eq=False)
class Source:
    """One FROM-clause binding inside a scope."""

    kind: str  # "table" | "cte" | "derived"
    name: str  # name the source is referenced by (alias or table name)
    table: str = ""  # physical table, kind="table"; CTE name for kind="cte"
    node: Optional[QueryNode] = None  # defining query for cte/derived


@dataclass(eq=False)
class Scope:
    node: QueryNode
    parent: Optional["Scope"]
    sources: list[Source]
    index: int  # visit order; makes the sentinel stable and unique

    def __post_init__(self):
        self.by_name: dict[str, Source] = {}
        for source in self.sources:
            self.by_name.setdefault(source.name, source)

    @property
    def sentinel(self) -> str:
        # "?" cannot occur in an identifier, so sentinels never collide
        # with real table names.
        return f"?q{self.index}"


class Resolution:
    """Annotation store produced by :func:`resolve` for one tree."""

    def __init__(self, tree: QueryTree, catalog: SchemaCatalog, strict: bool):
        self.tree = tree
        self.catalog = catalog
        self.strict = strict
        self._columns: dict[int, CanonSet] = {}
        self._scopes: dict[int, Scope] = {}
        self._outputs: dict[int, list[tuple[str, CanonSet]]] = {}
        self._source_outputs: dict[int, list[tuple[str, CanonSet]]] = {}
        self._relations: dict[int, frozenset[str]] = {}
        self._source_of_column: dict[int, Source] = {}
        self.unresolved: list[tuple[str, str]] = []  # (node path, name)

    # -- per-expression annotations ------------------------------------

    def annotation(self, node: exp.Expression) -> CanonSet:
        return self._columns.get(id(node), _EMPTY)

    def column_set(self, expr: exp.Expression) -> CanonSet:
        """Union of canonical columns mentioned in ``expr``, not crossing
        into nested subqueries."""
        out: set[CanonicalColumn] = set()
        for node in _walk_non_query(expr):
            hit = self._columns.get(id(node))
            if hit:
                out.update(hit)
        return frozenset(out)

    def column_source(self, node: exp.Expression) -> Optional[Source]:
        """The scope source a column reference bound to, if any."""
        return self._source_of_column.get(id(node))

    # -- per-query-node data -------------------------------------------

    def scope(self, node: QueryNode) -> Scope:
        return self._scopes[id(node)]

    def sources(self, node: QueryNode) -> list[Source]:
        return self._scopes[id(node)].sources

    def outputs(self, node: QueryNode) -> list[tuple[str, CanonSet]]:
        return self._outputs.get(id(node), [])

    def relations_under(self, node: QueryNode) -> frozenset[str]:
        """Physical base tables reachable from ``node`` and its subqueries,
        resolving CTE references through their definitions."""
        key = id(node)
        cached = self._relations.get(key)
        if cached is not None:
            return cached
        self._relations[key] = frozenset()  # cycle guard for self-references
        out: set[str] = set()
        for sub in node.iter_nodes():
            for source in self.sources(sub):
                if source.kind == "table":
                    out.add(source.table)
                elif source.node is not None:
                    out.update(self.relations_under(source.node))
        result = frozenset(out)
        self._relations[key] = result
        return result

    def source_base_tables(self, source: Source) -> frozenset[str]:
        if source.kind == "table":
            return frozenset({source.table})
        if source.node is not None:
            return self.relations_under(source.node)
        return frozenset()

    def source_knows(self, source: Source, column: str) -> bool:
        """Whether the source is known to expose ``column``."""
        if source.kind == "table":
            return self.catalog.has_column(source.table, column)
        return any(name == column for name, _ in self._source_outputs.get(id(source), []))

    def all_resolved(self) -> bool:
        return not self.unresolved


def _walk_non_query(expr: exp.Expression):
    yield expr
    for child in expr.iter_expressions():
        if not isinstance(child, QUERY_TYPES):
            yield from _walk_non_query(child)


def _cte_column_aliases(body: QueryNode) -> Optional[list[str]]:
    """Column list of the defining WITH entry, e.g. ``WITH x (a, b) AS``."""
    node: Optional[exp.Expression] = body.select
    while node is not None and not isinstance(node, exp.CTE):
        node = node.parent
    if isinstance(node, exp.CTE):
        columns = node.args["alias"].args.get("columns")
        if columns:
            return [ident_name(c) for c in columns]
    return None


def _derived_column_aliases(item: FromItem) -> Optional[list[str]]:
    alias = item.expr.args.get("alias") if isinstance(item.expr, exp.Subquery) else None
    if alias is not None:
        columns = alias.args.get("columns")
        if columns:
            return [ident_name(c) for c in columns]
    return None


class _Resolver:
    def __init__(self, tree: QueryTree, catalog: SchemaCatalog, strict: bool):
        self.tree = tree
        self.catalog = catalog
        self.strict = strict
        self.res = Resolution(tree, catalog, strict)
        self._counter = 0

    def run(self) -> Resolution:
        self.visit(self.tree.root, parent_scope=None, visible_ctes={})
        return self.res

    # -- scope construction ----------------------------------------------

    def visit(self, node: QueryNode, parent_scope: Optional[Scope], visible_ctes: dict[str, QueryNode]) -> None:
        ctes = dict(visible_ctes)
        for name, body in node.ctes:
            self.visit(body, parent_scope=None, visible_ctes=dict(ctes))
            ctes[name] = body

        sources = []
        for item in node.from_items:
            sources.append(self._make_source(item, ctes))
        scope = Scope(node=node, parent=parent_scope, sources=sources, index=self._counter)
        self._counter += 1
        self.res._scopes[id(node)] = scope

        for item, source in zip(node.from_items, sources):
            if source.kind == "derived" and source.node is not None:
                self.visit(source.node, parent_scope=None, visible_ctes=dict(ctes))
                aliases = _derived_column_aliases(item)
                self._register_source_outputs(source, aliases)
            elif source.kind == "cte" and source.node is not None:
                self._register_source_outputs(source, _cte_column_aliases(source.node))

        self._annotate_node(node, scope)
        self.res._outputs[id(node)] = self._compute_outputs(node, scope)

        handled = {id(body) for _, body in node.ctes}
        handled.update(id(i.node) for i in node.from_items if i.node is not None)
        handled.update(id(n) for _, n in node.set_ops)
        for child in node.children:
            if id(child) not in handled:
                self.visit(child, parent_scope=scope, visible_ctes=dict(ctes))
        for _, follower in node.set_ops:
            self.visit(follower, parent_scope=parent_scope, visible_ctes=dict(ctes))

    def _make_source(self, item: FromItem, ctes: dict[str, QueryNode]) -> Source:
        if item.kind == "table":
            body = ctes.get(item.table)
            if body is not None:
                return Source(kind="cte", name=item.alias, table=item.table, node=body)
            return Source(kind="table", name=item.alias, table=item.table)
        return Source(kind="derived", name=item.alias, node=item.node)

    def _register_source_outputs(self, source: Source, aliases: Optional[list[str]]) -> None:
        assert source.node is not None
        outputs = self.res.outputs(source.node)
        if aliases:
            outputs = [(aliases[i] if i < len(aliases) else name, cs) for i, (name, cs) in enumerate(outputs)]
        self.res._source_outputs[id(source)] = outputs

    def _source_outputs(self, source: Source) -> list[tuple[str, CanonSet]]:
        hit = self.res._source_outputs.get(id(source))
        if hit is not None:
            return hit
        if source.node is not None:
            outputs = self.res.outputs(source.node)
            if source.kind == "cte":
                aliases = _cte_column_aliases(source.node)
                if aliases:
                    outputs = [(aliases[i] if i < len(aliases) else n, cs) for i, (n, cs) in enumerate(outputs)]
            self.res._source_outputs[id(source)] = outputs
            return outputs
        return []

    # -- column binding ----------------------------------------------------

    def _source_knows(self, source: Source, name: str) -> bool:
        if source.kind == "table":
            return self.catalog.has_column(source.table, name)
        return any(out_name == name for out_name, _ in self._source_outputs(source))

    def _resolve_in_source(self, source: Source, name: str) -> Optional[CanonSet]:
        if source.kind == "table":
            if self.catalog.has_table(source.table):
                if self.catalog.has_column(source.table, name):
                    return frozenset({CanonicalColumn(source.table, name)})
                return None
            return frozenset({CanonicalColumn(source.table, name, resolved=False)})
        for out_name, canon in self._source_outputs(source):
            if out_name == name:
                return canon
        return None

    def _source_star(self, source: Source) -> list[tuple[str, CanonSet]]:
        """(column name, canon set) pairs a star over ``source`` expands to."""
        if source.kind == "table":
            if self.catalog.has_table(source.table):
                return [
                    (column, frozenset({CanonicalColumn(source.table, column)}))
                    for column in self.catalog.columns(source.table)
                ]
            return []
        return [(name, canon) for name, canon in self._source_outputs(source) if name]

    def _lookup(
        self,
        scope: Scope,
        qualifier: str,
        name: str,
        context: str,
        alias_map: dict[str, CanonSet],
    ) -> tuple[CanonSet, Optional[Source]]:
        # ORDER BY gives select-list output names precedence over inputs.
        if not qualifier and context == "order" and name in alias_map:
            return alias_map[name], None
        current: Optional[Scope] = scope
        while current is not None:
            if qualifier:
                source = current.by_name.get(qualifier)
                if source is not None:
                    canon = self._resolve_in_source(source, name)
                    if canon is not None:
                        return canon, source
                    # Qualifier bound but the column is unknown there: the
                    # binding is definitive, so this is a dead reference.
                    return self._sentinel(scope, name), source
            else:
                candidates = [s for s in current.sources if self._source_knows(s, name)]
                if len(candidates) == 1:
                    canon = self._resolve_in_source(candidates[0], name)
                    if canon is not None:
                        return canon, candidates[0]
                elif len(candidates) > 1:
                    if self.strict:
                        raise AmbiguousColumn(name, [f"{s.name}.{name}" for s in candidates])
                    return self._sentinel(scope, name), None
                if current is scope and context in _ALIAS_CONTEXTS and name in alias_map:
                    return alias_map[name], None
            current = current.parent
        if not qualifier:
            # Schemaless fallback: one uncataloged FROM table claims the column.
            only = scope.sources[0] if len(scope.sources) == 1 else None
            if only is not None and only.kind == "table" and not self.catalog.has_table(only.table):
                return frozenset({CanonicalColumn(only.table, name, resolved=False)}), only
        return self._sentinel(scope, name), None

    def _sentinel(self, scope: Scope, name: str) -> CanonSet:
        self.res.unresolved.append((scope.node.path(), name))
        return frozenset({CanonicalColumn(scope.sentinel, name, resolved=False)})

    # -- node annotation ----------------------------------------------------

    def _annotate_node(self, node: QueryNode, scope: Scope) -> None:
        alias_map: dict[str, CanonSet] = {}
        item_sets: list[CanonSet] = []

        for item in node.select_exprs:
            self._annotate_region(item, scope, "select", alias_map, item_sets, is_select_item=True)
            item_sets.append(self.res.column_set(item))
            if isinstance(item, exp.Alias):
                alias_map.setdefault(ident_name(item.args.get("alias")), item_sets[-1])
            elif isinstance(item, exp.Column) and isinstance(item.this, exp.Identifier):
                # plain column items contribute their output name too
                alias_map.setdefault(ident_name(item.this), item_sets[-1])

        for from_item in node.from_items:
            if from_item.join is None:
                continue
            on = from_item.join.args.get("on")
            if on is not None:
                self._annotate_region(on, scope, "join", alias_map, item_sets)
            for using in from_item.join.args.get("using") or []:
                self._annotate_using(using, scope)

        if node.where_pred is not None:
            self._annotate_region(node.where_pred, scope, "where", alias_map, item_sets)
        for item in node.group_items:
            self._annotate_region(item, scope, "group", alias_map, item_sets)
        if node.having is not None:
            self._annotate_region(node.having, scope, "having", alias_map, item_sets)
        qualify = node.select.args.get("qualify")
        if qualify is not None:
            self._annotate_region(qualify.this, scope, "where", alias_map, item_sets)
        for item in node.order_items:
            target = item.this if isinstance(item, exp.Ordered) else item
            self._annotate_region(target, scope, "order", alias_map, item_sets)

    def _annotate_region(
        self,
        region: exp.Expression,
        scope: Scope,
        context: str,
        alias_map: dict[str, CanonSet],
        item_sets: list[CanonSet],
        is_select_item: bool = False,
    ) -> None:
        target = region.this if isinstance(region, exp.Alias) else region
        if context in _ALIAS_CONTEXTS and isinstance(target, exp.Literal) and not target.args.get("is_string"):
            # Positional reference to a select item (GROUP BY 2, ORDER BY 1).
            try:
                ordinal = int(target.name)
            except ValueError:
                ordinal = 0
            if 1 <= ordinal <= len(item_sets):
                self.res._columns[id(target)] = item_sets[ordinal - 1]
            return
        for node in _walk_non_query(region):
            if isinstance(node, exp.Column):
                if isinstance(node.this, exp.Star):
                    if is_select_item and node is target:
                        self._annotate_star(node, scope, ident_name(node.args.get("table")))
                    else:
                        self.res._columns[id(node)] = _EMPTY
                    continue
                qualifier = ident_name(node.args.get("table"))
                name = ident_name(node.this) if isinstance(node.this, exp.Identifier) else str(node.this).lower()
                canon, source = self._lookup(scope, qualifier, name, context, alias_map)
                self.res._columns[id(node)] = canon
                if source is not None:
                    self.res._source_of_column[id(node)] = source
            elif isinstance(node, exp.Star):
                if is_select_item and node is target:
                    self._annotate_star(node, scope, "")
                else:
                    self.res._columns[id(node)] = _EMPTY

    def _annotate_star(self, node: exp.Expression, scope: Scope, qualifier: str) -> None:
        if qualifier:
            source = scope.by_name.get(qualifier)
            sources = [source] if source is not None else []
        else:
            sources = scope.sources
        out: set[CanonicalColumn] = set()
        for source in sources:
            for _, canon in self._source_star(source):
                out.update(canon)
        self.res._columns[id(node)] = frozenset(out)

    def _annotate_using(self, using: exp.Expression, scope: Scope) -> None:
        name = ident_name(using.this) if isinstance(using, exp.Column) else ident_name(using)
        out: set[CanonicalColumn] = set()
        for source in scope.sources:
            if self._source_knows(source, name):
                canon = self._resolve_in_source(source, name)
                if canon:
                    out.update(canon)
        self.res._columns[id(using)] = frozenset(out) if out else self._sentinel(scope, name)

    # -- outputs -------------------------------------------------------------

    def _compute_outputs(self, node: QueryNode, scope: Scope) -> list[tuple[str, CanonSet]]:
        outputs: list[tuple[str, CanonSet]] = []
        for item in node.select_exprs:
            if isinstance(item, exp.Alias):
                outputs.append((ident_name(item.args.get("alias")), self.res.column_set(item.this)))
            elif isinstance(item, exp.Column) and isinstance(item.this, exp.Star):
                source = scope.by_name.get(ident_name(item.args.get("table")))
                outputs.extend(self._source_star(source) if source is not None else [])
            elif isinstance(item, exp.Column):
                outputs.append((ident_name(item.this), self.res.annotation(item)))
            elif isinstance(item, exp.Star):
                for source in scope.sources:
                    outputs.extend(self._source_star(source))
            else:
                outputs.append(("", self.res.column_set(item)))
        return outputs


def resolve(tree: QueryTree, catalog: Optional[SchemaCatalog] = None, strict: bool = False) -> QueryTree:
    """Annotate ``tree`` with canonical column identities and return it.

    With no catalog the resolver runs in schemaless mode: single-table FROM
    clauses still attribute bare columns to their table; everything else
    unattributable becomes a scope-unique sentinel.  ``strict`` turns bare
    column names matching several in-scope tables into
    :class:`AmbiguousColumn` errors instead of sentinels.
    """
    resolver = _Resolver(tree, catalog or EMPTY_CATALOG, strict)
    tree.resolution = resolver.run()
    return tree


def expand_stars(tree: QueryTree) -> QueryTree:
    """Rewrite ``*`` and ``t.*`` select items into explicit column lists.

    Returns a new, re-parsed and re-resolved tree; stars whose expansion is
    unknown (uncataloged tables) are left in place.
    """
    from .frontend import parse  # local import to avoid cycle at module load

    resolution = tree.resolution
    if resolution is None:
        raise ValueError("tree must be resolved before expanding stars")

    statement = tree.statement.copy()
    # The copy has identical structure; pair originals with copies by walk order.
    pairs = list(zip(tree.statement.walk(), statement.walk()))
    replacements: list[tuple[exp.Expression, list[exp.Expression]]] = []
    for original, copied in pairs:
        if not isinstance(copied, exp.Select):
            continue
        new_items: list[exp.Expression] = []
        changed = False
        for orig_item, item in zip(original.expressions, copied.expressions):
            is_star = isinstance(item, exp.Star) or (
                isinstance(item, exp.Column) and isinstance(item.this, exp.Star)
            )
            expansion = sorted(resolution.annotation(orig_item), key=lambda c: (c.table, c.column))
            if is_star and expansion:
                changed = True
                new_items.extend(exp.column(c.column, table=c.table) for c in expansion)
            else:
                new_items.append(item)
        if changed:
            replacements.append((copied, new_items))
    for select, items in replacements:
        select.set("expressions", items)

    new_tree = parse(statement.sql(dialect=tree.dialect), dialect=tree.dialect)
    return resolve(new_tree, resolution.catalog, resolution.strict)
