"""Bag-valued and numeric structural features of SQL queries.

Six bag features (select columns, all-position columns, relations, basic
WHERE predicates, join pairs, aggregations, function names - seven
counting both column variants) plus three numeric features (CTE count,
subquery count, function-bearing expression count).  Every bag feature is
the recursive union over the query and all of its subqueries, so a
feature of a subquery is always a subset of the same feature of the whole
statement.  Any bag feature also acts as a numeric feature through its
cardinality.

Canonicalization rules (shared with the canonical renderer):

* column references are rewritten to physical ``table.column`` form; an
  expression-valued alias becomes the brace-set of base columns it
  mentions (``{a.b,c.d}``); references with no column content keep their
  lowercased written name;
* numeric literals are normalized (``20.0`` -> ``20``); strings verbatim;
* ``a > b`` / ``a >= b`` normalize to ``b < a`` / ``b <= a``; ``=`` and
  ``<>`` operands sort lexicographically; IN value lists sort; NOT folds
  into the operator tag, De-Morganing through AND/OR;
* rendered subquery operands drop table and derived-table aliases;
* CASE/IF arms, AND/OR, and EXISTS are not counted as functions even
  though the parser models them as such; CAST and EXTRACT are counted
  (they are spelled as calls and transform data);
* an aggregate applied inside an OVER clause is windowed: it counts as a
  function but not as an aggregation.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Union

from sqlglot import exp

from .frontend import QueryNode, QueryTree, ident_name, walk_non_query
from .resolve import CanonicalColumn, Resolution

# sqlglot models some pure syntax as Func subclasses; none of these are
# SQL function calls.
NON_FUNCTIONS = (exp.Connector, exp.Case, exp.If, exp.Exists)
# GROUPING() inspects grouping sets; it aggregates nothing.
NON_AGGREGATES = (exp.Grouping,)

Bag = Union[frozenset, Counter]

BAG_FEATURES = (
    "cols_select",
    "cols_all",
    "relations",
    "where_preds",
    "join_pairs",
    "aggregations",
    "functions",
)
NUMERIC_FEATURES = ("cte_count", "subquery_count", "func_expr_count")


@dataclass(frozen=True, order=True)
class PredicateTuple:
    """One basic predicate: operator tag plus canonical operand strings."""

    pred: str
    exprs: tuple[str, ...]

    def to_list(self) -> list[str]:
        return [self.pred, *self.exprs]


@dataclass(frozen=True, order=True)
class AggTuple:
    """One aggregate application with the grouping columns of its query."""

    agg: str
    expr: str
    group_by: tuple[str, ...]

    def to_list(self) -> list:
        return [self.agg, self.expr, list(self.group_by)]


@dataclass(frozen=True)
class FeatureVector:
    """All features of one query; bags deduplicate unless ``multiset``."""

    cols_select: Bag
    cols_all: Bag
    relations: Bag
    where_preds: Bag
    join_pairs: Bag
    aggregations: Bag
    functions: Bag
    cte_count: int
    subquery_count: int
    func_expr_count: int
    multiset: bool = False

    def bag(self, name: str) -> Bag:
        return getattr(self, name)

    def bags(self) -> dict[str, Bag]:
        return {name: getattr(self, name) for name in BAG_FEATURES}

    def count(self, name: str) -> int:
        """Numeric view: cardinality for bag features, value for numerics."""
        if name in BAG_FEATURES:
            bag = getattr(self, name)
            return sum(bag.values()) if isinstance(bag, Counter) else len(bag)
        return getattr(self, name)

    def to_dict(self) -> dict:
        out: dict = {}
        for name in BAG_FEATURES:
            out[name] = _serialize_bag(getattr(self, name))
        for name in NUMERIC_FEATURES:
            out[name] = getattr(self, name)
        return out


def _item_key(item) -> object:
    if isinstance(item, (list, tuple)):
        return tuple(_item_key(v) for v in item)
    return item


def _serialize_item(item):
    if isinstance(item, CanonicalColumn):
        return str(item)
    if isinstance(item, PredicateTuple):
        return item.to_list()
    if isinstance(item, AggTuple):
        return item.to_list()
    if isinstance(item, tuple):  # join pair
        return list(item)
    return item


def _serialize_bag(bag: Bag) -> list:
    if isinstance(bag, Counter):
        items: list = []
        for item, count in bag.items():
            items.extend([_serialize_item(item)] * count)
    else:
        items = [_serialize_item(item) for item in bag]
    return sorted(items, key=_item_key)


def _bag(items: Iterable, multiset: bool) -> Bag:
    return Counter(items) if multiset else frozenset(items)


def _resolution(tree: QueryTree) -> Resolution:
    if tree.resolution is None:
        raise ValueError("tree is not resolved; call resolve() first")
    return tree.resolution


# -- canonical rendering -------------------------------------------------------


def canon_number(text: str) -> str:
    d = Decimal(text)
    if d == d.to_integral_value():
        return str(d.to_integral_value())
    return format(d.normalize(), "f")


def _plain_ident(name: str) -> exp.Identifier:
    identifier = exp.to_identifier(name)
    identifier.set("quoted", False)
    return identifier


def canonical_sql(expr: exp.Expression, res: Resolution) -> str:
    """Render ``expr`` with columns substituted by their canonical sets,
    numeric literals normalized, and all table/derived aliases dropped."""
    copied = expr.copy()
    pairs = list(zip(expr.walk(), copied.walk()))
    for original, cp in pairs:
        if isinstance(cp, exp.Column) and not isinstance(cp.this, exp.Star):
            canon = sorted(res.annotation(original))
            if len(canon) == 1:
                cp.set("table", _plain_ident(canon[0].table))
                cp.set("this", _plain_ident(canon[0].column))
            elif canon:
                cp.set("table", None)
                cp.set("this", _plain_ident("{" + ",".join(str(c) for c in canon) + "}"))
            else:
                cp.set("table", None)
                cp.set("this", _plain_ident(ident_name(cp.this) if isinstance(cp.this, exp.Identifier) else str(cp.this).lower()))
        elif isinstance(cp, exp.Literal) and not cp.args.get("is_string"):
            cp.set("this", canon_number(cp.name))
        elif isinstance(cp, exp.Table):
            cp.set("alias", None)
            if isinstance(cp.this, exp.Identifier):
                cp.set("this", _plain_ident(ident_name(cp.this)))
        elif isinstance(cp, exp.Subquery):
            cp.set("alias", None)
    return copied.sql()


# -- predicate decomposition -----------------------------------------------------


def _unwrap(node: exp.Expression) -> exp.Expression:
    while isinstance(node, exp.Paren):
        node = node.this
    return node


def split_basic_predicates(condition: exp.Expression) -> list[exp.Expression]:
    """Decompose a boolean tree into basic predicate leaves.

    AND and OR conjuncts/disjuncts both split; NOT over AND/OR applies
    De Morgan; remaining NOTs stay attached for operator folding.
    """
    node = _unwrap(condition)
    if isinstance(node, (exp.And, exp.Or)):
        return split_basic_predicates(node.this) + split_basic_predicates(node.expression)
    if isinstance(node, exp.Not):
        inner = _unwrap(node.this)
        if isinstance(inner, (exp.And, exp.Or)):
            return split_basic_predicates(exp.Not(this=inner.this)) + split_basic_predicates(
                exp.Not(this=inner.expression)
            )
        if isinstance(inner, exp.Not):
            return split_basic_predicates(inner.this)
    return [node]


_FLIP_NEGATED = {"LT": "GTE", "GT": "LTE", "LTE": "GT", "GTE": "LT"}
_INEQ_TAG = {"LT": "<", "LTE": "<="}


def predicate_tuple(leaf: exp.Expression, res: Resolution) -> PredicateTuple:
    leaf = _unwrap(leaf)
    negated = False
    while isinstance(leaf, exp.Not):
        negated = not negated
        leaf = _unwrap(leaf.this)

    def r(e: exp.Expression) -> str:
        return canonical_sql(e, res)

    if isinstance(leaf, (exp.EQ, exp.NEQ)):
        tag = "=" if isinstance(leaf, exp.EQ) else "<>"
        if negated:
            tag = "<>" if tag == "=" else "="
        return PredicateTuple(tag, tuple(sorted([r(leaf.this), r(leaf.expression)])))
    if isinstance(leaf, (exp.LT, exp.GT, exp.LTE, exp.GTE)):
        a, b = r(leaf.this), r(leaf.expression)
        kind = type(leaf).__name__
        if negated:  # NOT a<b == a>=b, etc.
            kind = _FLIP_NEGATED[kind]
        if kind == "GT":  # direction-normalize: a>b == b<a
            kind, a, b = "LT", b, a
        elif kind == "GTE":
            kind, a, b = "LTE", b, a
        return PredicateTuple(_INEQ_TAG[kind], (a, b))
    if isinstance(leaf, (exp.Like, exp.ILike)):
        tag = "LIKE" if isinstance(leaf, exp.Like) else "ILIKE"
        if negated:
            tag = "NOT " + tag
        return PredicateTuple(tag, (r(leaf.this), r(leaf.expression)))
    if isinstance(leaf, exp.Between):
        tag = "NOT BETWEEN" if negated else "BETWEEN"
        return PredicateTuple(tag, (r(leaf.this), r(leaf.args["low"]), r(leaf.args["high"])))
    if isinstance(leaf, exp.In):
        tag = "NOT IN" if negated else "IN"
        if leaf.args.get("query") is not None:
            return PredicateTuple(tag, (r(leaf.this), r(leaf.args["query"])))
        return PredicateTuple(tag, (r(leaf.this), *sorted(r(e) for e in leaf.expressions)))
    if isinstance(leaf, exp.Is):
        base_negated = bool(leaf.args.get("negate")) ^ negated
        if isinstance(_unwrap(leaf.expression), exp.Null):
            return PredicateTuple("IS NOT NULL" if base_negated else "IS NULL", (r(leaf.this),))
        return PredicateTuple("IS NOT" if base_negated else "IS", (r(leaf.this), r(leaf.expression)))
    if isinstance(leaf, exp.Exists):
        body = r(leaf.this)
        if not body.startswith("("):
            body = f"({body})"
        return PredicateTuple("NOT EXISTS" if negated else "EXISTS", (body,))
    if negated:
        return PredicateTuple("NOT", (r(leaf),))
    return PredicateTuple("EXPR", (r(leaf),))


# -- per-node helpers ------------------------------------------------------------


def _node_predicate_leaves(node: QueryNode) -> list[exp.Expression]:
    leaves: list[exp.Expression] = []
    if node.where_pred is not None:
        leaves.extend(split_basic_predicates(node.where_pred))
    if node.having is not None:
        leaves.extend(split_basic_predicates(node.having))
    return leaves


def _join_condition_columns(node: QueryNode, res: Resolution) -> list[CanonicalColumn]:
    out: list[CanonicalColumn] = []
    for item in node.from_items:
        if item.join is None:
            continue
        on = item.join.args.get("on")
        if on is not None:
            out.extend(sorted(res.column_set(on)))
        for using in item.join.args.get("using") or []:
            out.extend(sorted(res.annotation(using)))
    return out


def _is_function(node: exp.Expression) -> bool:
    return isinstance(node, exp.Func) and not isinstance(node, NON_FUNCTIONS)


def _func_name(node: exp.Expression) -> str:
    return node.name.upper() if isinstance(node, exp.Anonymous) else node.sql_name()


def _has_function(expr: exp.Expression) -> bool:
    return any(_is_function(n) for n in walk_non_query(expr))


def _node_group_columns(node: QueryNode, res: Resolution) -> frozenset[CanonicalColumn]:
    out: set[CanonicalColumn] = set()
    for item in node.group_items:
        out |= res.column_set(item)
    return frozenset(out)


# -- extractors --------------------------------------------------------------------


def extract_select_columns(tree: QueryTree, multiset: bool = False) -> Bag:
    """Columns mentioned in SELECT expressions, unioned over all subqueries."""
    res = _resolution(tree)
    items: list[CanonicalColumn] = []
    for node in tree.nodes():
        for item in node.select_exprs:
            items.extend(sorted(res.column_set(item)))
    return _bag(items, multiset)


def extract_all_columns(tree: QueryTree, multiset: bool = False) -> Bag:
    """Columns anywhere in SELECT, JOIN conditions, WHERE, GROUP BY, HAVING."""
    res = _resolution(tree)
    items: list[CanonicalColumn] = []
    for node in tree.nodes():
        for item in node.select_exprs:
            items.extend(sorted(res.column_set(item)))
        items.extend(_join_condition_columns(node, res))
        if node.where_pred is not None:
            items.extend(sorted(res.column_set(node.where_pred)))
        for item in node.group_items:
            items.extend(sorted(res.column_set(item)))
        if node.having is not None:
            items.extend(sorted(res.column_set(node.having)))
    return _bag(items, multiset)


def extract_relations(tree: QueryTree, multiset: bool = False) -> Bag:
    """Physical base tables of every FROM clause; CTE references resolve to
    the base tables their definitions use, CTE names never appear."""
    res = _resolution(tree)
    items: list[str] = []
    for node in tree.nodes():
        for source in res.sources(node):
            if source.kind == "table":
                items.append(source.table)
            elif multiset and source.node is not None:
                # a CTE/derived reference re-counts its base tables
                items.extend(sorted(res.relations_under(source.node)))
    return _bag(items, multiset)


def extract_where_predicates(tree: QueryTree, multiset: bool = False) -> Bag:
    """Basic predicates of every WHERE and HAVING clause in the tree."""
    res = _resolution(tree)
    items = [
        predicate_tuple(leaf, res)
        for node in tree.nodes()
        for leaf in _node_predicate_leaves(node)
    ]
    return _bag(items, multiset)


def extract_aggregations(tree: QueryTree, multiset: bool = False) -> Bag:
    """Aggregate applications paired with their query's GROUP BY columns.

    Aggregates applied directly as window functions (``SUM(x) OVER ...``)
    are excluded; aggregates nested in a window's arguments still count.
    """
    res = _resolution(tree)
    items: list[AggTuple] = []
    for node in tree.nodes():
        group_cols = tuple(str(c) for c in sorted(_node_group_columns(node, res)))
        for sub in walk_non_query(node.select):
            if not isinstance(sub, exp.AggFunc) or isinstance(sub, NON_AGGREGATES):
                continue
            if isinstance(sub.parent, exp.Window) and sub.parent.this is sub:
                continue
            arg = sub.this
            if arg is None:
                expr_text = ""
            elif isinstance(arg, exp.Star):
                expr_text = "*"
            else:
                parts = [canonical_sql(arg, res)]
                parts += [canonical_sql(e, res) for e in sub.expressions]
                expr_text = ", ".join(parts)
            items.append(AggTuple(_func_name(sub), expr_text, group_cols))
    return _bag(items, multiset)


def extract_functions(tree: QueryTree, multiset: bool = False) -> Bag:
    """Uppercased names of all function applications (scalar, aggregate,
    window); synonyms normalize to one name (SUBSTR -> SUBSTRING)."""
    res = _resolution(tree)
    items = [
        _func_name(sub)
        for node in tree.nodes()
        for sub in walk_non_query(node.select)
        if _is_function(sub)
    ]
    return _bag(items, multiset)


def extract_join_pairs(tree: QueryTree, multiset: bool = False) -> Bag:
    """Unordered pairs of physical relations joined in the logical plan.

    Edges come from explicit JOIN conditions and from WHERE equalities
    linking columns of two distinct FROM bindings (comma-style and
    correlated).  A side that is a CTE or derived table attributes the
    edge to the base tables its join column resolves to, falling back to
    every base table under that side.
    """
    res = _resolution(tree)
    items: list[tuple[str, str]] = []
    for node in tree.nodes():
        items.extend(_node_join_pairs(node, res))
    return _bag(items, multiset)


def _column_tables(canon: frozenset[CanonicalColumn], source, res: Resolution) -> frozenset[str]:
    tables = frozenset(c.table for c in canon if not c.table.startswith("?q"))
    if tables:
        return tables
    return res.source_base_tables(source)


def _equality_column_pair(leaf: exp.Expression):
    leaf = _unwrap(leaf)
    if not isinstance(leaf, exp.EQ):
        return None
    a, b = _unwrap(leaf.this), _unwrap(leaf.expression)
    if (
        isinstance(a, exp.Column)
        and isinstance(b, exp.Column)
        and not isinstance(a.this, exp.Star)
        and not isinstance(b.this, exp.Star)
    ):
        return a, b
    return None


def _node_join_pairs(node: QueryNode, res: Resolution) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []

    def edges_from(leaf: exp.Expression) -> bool:
        pair = _equality_column_pair(leaf)
        if pair is None:
            return False
        col_a, col_b = pair
        src_a, src_b = res.column_source(col_a), res.column_source(col_b)
        if src_a is None or src_b is None or src_a is src_b:
            return False
        added = False
        for ta in sorted(_column_tables(res.annotation(col_a), src_a, res)):
            for tb in sorted(_column_tables(res.annotation(col_b), src_b, res)):
                pairs.append(tuple(sorted((ta, tb))))
                added = True
        return added

    if node.where_pred is not None:
        for leaf in split_basic_predicates(node.where_pred):
            edges_from(leaf)

    scope_sources = res.sources(node)
    for index, item in enumerate(node.from_items):
        if not item.is_explicit_join:
            continue
        source = scope_sources[index]
        base = res.source_base_tables(source)
        got_edge = False
        on = item.join.args.get("on") if item.join is not None else None
        if on is not None:
            for leaf in split_basic_predicates(on):
                if edges_from(leaf):
                    got_edge = True
            if not got_edge:
                # No column=column equality: pair this side with the owner
                # of any column the condition mentions.
                for sub in walk_non_query(on):
                    if isinstance(sub, exp.Column) and not isinstance(sub.this, exp.Star):
                        other = res.column_source(sub)
                        if other is not None and other is not source:
                            for ta in sorted(base):
                                for tb in sorted(_column_tables(res.annotation(sub), other, res)):
                                    pairs.append(tuple(sorted((ta, tb))))
                                    got_edge = True
        using_cols = (item.join.args.get("using") or []) if item.join is not None else []
        for using in using_cols:
            name = ident_name(using.this) if isinstance(using, exp.Column) else ident_name(using)
            for other in scope_sources:
                if other is source or not res.source_knows(other, name):
                    continue
                for ta in sorted(base):
                    for tb in sorted(res.source_base_tables(other)):
                        pairs.append(tuple(sorted((ta, tb))))
                        got_edge = True
        if not got_edge and index > 0 and (on is not None or using_cols):
            previous = scope_sources[index - 1]
            for ta in sorted(base):
                for tb in sorted(res.source_base_tables(previous)):
                    pairs.append(tuple(sorted((ta, tb))))
    return pairs


def count_func_exprs(tree: QueryTree) -> int:
    """Top-level expressions (select items, basic predicates, group items)
    containing at least one function application."""
    _resolution(tree)
    total = 0
    for node in tree.nodes():
        for item in node.select_exprs:
            total += _has_function(item)
        for leaf in _node_predicate_leaves(node):
            total += _has_function(leaf)
        for item in node.group_items:
            total += _has_function(item)
    return total


def count_ctes(tree: QueryTree) -> int:
    """WITH-defined CTEs at any nesting depth."""
    return sum(len(node.ctes) for node in tree.nodes())


def feature_vector(tree: QueryTree, multiset: bool = False) -> FeatureVector:
    """Run every extractor once over a resolved tree."""
    return FeatureVector(
        cols_select=extract_select_columns(tree, multiset),
        cols_all=extract_all_columns(tree, multiset),
        relations=extract_relations(tree, multiset),
        where_preds=extract_where_predicates(tree, multiset),
        join_pairs=extract_join_pairs(tree, multiset),
        aggregations=extract_aggregations(tree, multiset),
        functions=extract_functions(tree, multiset),
        cte_count=count_ctes(tree),
        subquery_count=len(tree.nodes()) - 1,
        func_expr_count=count_func_exprs(tree),
        multiset=multiset,
    )
