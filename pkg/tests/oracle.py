"""Brute-force feature oracle for the fixture suite.

Written before the package's extractors and sharing no code with them:
everything here is recomputed from a raw sqlglot parse with plain
recursive walks.  The oracle refuses to guess - any column it cannot
attribute raises OracleUnresolved, which keeps the fixture queries honest
(fixtures must resolve fully, via the catalog or the single-uncataloged-
table rule).  Fixture constraint: CTE names are globally unique within a
statement.

Output format (shared contract with FeatureVector.to_dict):
    cols_select / cols_all / relations: sorted "table.column" / "table" lists
    where_preds:   sorted lists of [tag, operand, ...]
    join_pairs:    sorted lists of [table_a, table_b] (each pair sorted)
    aggregations:  sorted lists of [AGG, expr, [group cols...]]
    functions:     sorted list of names
    cte_count / subquery_count / func_expr_count: ints
"""
from __future__ import annotations

from decimal import Decimal

import sqlglot
from sqlglot import exp

QUERY = (exp.Select, exp.SetOperation)
# sqlglot models some pure syntax as Func subclasses; none of these are
# SQL function calls: AND/OR/XOR connectors, CASE/IF arms, EXISTS predicate.
NON_FUNCTIONS = (exp.Connector, exp.Case, exp.If, exp.Exists)
# GROUPING() is a grouping-set indicator, not an aggregation of a column.
NON_AGGREGATES = (exp.Grouping,)


class OracleUnresolved(Exception):
    pass


def canon_number(text: str) -> str:
    d = Decimal(text)
    if d == d.to_integral_value():
        return str(d.to_integral_value())
    return format(d.normalize(), "f")


def ident(node) -> str:
    if node is None:
        return ""
    if isinstance(node, exp.Identifier):
        return node.name if node.args.get("quoted") else node.name.lower()
    return str(node).lower()


def walk_local(node):
    """Walk without entering nested query scopes."""
    yield node
    for child in node.iter_expressions():
        if not isinstance(child, QUERY):
            yield from walk_local(child)


def is_function(node) -> bool:
    return isinstance(node, exp.Func) and not isinstance(node, NON_FUNCTIONS)


def func_name(node) -> str:
    return node.name.upper() if isinstance(node, exp.Anonymous) else node.sql_name()


class OEntry:
    """One FROM binding; identity matters (self-joins)."""

    def __init__(self, name, kind, table=None, outputs=None, qexpr=None):
        self.name = name
        self.kind = kind  # "table" | "rel"
        self.table = table
        self.outputs = outputs or []
        self.qexpr = qexpr


class Env:
    def __init__(self, parent, catalog):
        self.parent = parent
        self.catalog = catalog
        self.entries: list[OEntry] = []
        self._ctes = {}

    def lookup(self, qualifier, name, aliases=None):
        """Resolve to (canon set, owning entry)."""
        env = self
        while env is not None:
            if qualifier:
                for entry in env.entries:
                    if entry.name == qualifier:
                        if entry.kind == "table":
                            if entry.table in env.catalog and name not in env.catalog[entry.table]:
                                raise OracleUnresolved(f"{qualifier}.{name}")
                            return {f"{entry.table}.{name}"}, entry
                        for out_name, canon in entry.outputs:
                            if out_name == name:
                                return set(canon), entry
                        raise OracleUnresolved(f"{qualifier}.{name}")
            else:
                hits = []
                for entry in env.entries:
                    if entry.kind == "table":
                        if entry.table in env.catalog and name in env.catalog[entry.table]:
                            hits.append(({f"{entry.table}.{name}"}, entry))
                    else:
                        for out_name, canon in entry.outputs:
                            if out_name == name:
                                hits.append((set(canon), entry))
                                break
                if len(hits) == 1:
                    return hits[0]
                if len(hits) > 1:
                    raise OracleUnresolved(f"ambiguous {name}")
                if env is self and aliases and name in aliases:
                    return set(aliases[name]), None
            env = env.parent
        if not qualifier and len(self.entries) == 1:
            only = self.entries[0]
            if only.kind == "table" and only.table not in self.catalog:
                return {f"{only.table}.{name}"}, only
        raise OracleUnresolved(qualifier + "." + name if qualifier else name)


def resolve_column(col, env, aliases=None):
    return env.lookup(ident(col.args.get("table")), ident(col.this), aliases)[0]


def columns_in(expr, env, aliases=None):
    out = set()
    for node in walk_local(expr):
        if isinstance(node, exp.Column) and not isinstance(node.this, exp.Star):
            out |= resolve_column(node, env, aliases)
    return out


def star_outputs(item, env):
    qualifier = ident(item.args.get("table")) if isinstance(item, exp.Column) else ""
    outs = []
    for entry in env.entries:
        if qualifier and entry.name != qualifier:
            continue
        if entry.kind == "table":
            for col in env.catalog.get(entry.table, []):
                outs.append((col, {f"{entry.table}.{col}"}))
        else:
            outs.extend((n, set(c)) for n, c in entry.outputs if n)
    return outs


# -- canonical rendering ------------------------------------------------------


def render(expr, env, aliases=None):
    copied = expr.copy()
    _subst(copied, env, aliases, env.catalog, env._ctes)
    return copied.sql()


def _plain_ident(name):
    identifier = exp.to_identifier(name)
    identifier.set("quoted", False)
    return identifier


def _subst(node, env, aliases, catalog, ctes):
    if isinstance(node, exp.Column) and not isinstance(node.this, exp.Star):
        canon = sorted(resolve_column(node, env, aliases))
        if len(canon) == 1:
            table, _, column = canon[0].rpartition(".")
            node.set("table", _plain_ident(table))
            node.set("this", _plain_ident(column))
        elif canon:
            node.set("table", None)
            node.set("this", _plain_ident("{" + ",".join(canon) + "}"))
        else:
            node.set("table", None)
            node.set("this", _plain_ident(ident(node.this)))
        return
    if isinstance(node, exp.Literal) and not node.args.get("is_string"):
        node.set("this", canon_number(node.name))
        return
    if isinstance(node, QUERY):
        _subst_query(node, env, catalog, ctes)
        return
    for child in list(node.iter_expressions()):
        _subst(child, env, aliases, catalog, ctes)


def _subst_query(qexpr, parent_env, catalog, ctes):
    ctes = register_ctes(qexpr, catalog, ctes)
    if isinstance(qexpr, exp.SetOperation):
        _subst_query(qexpr.this, parent_env, catalog, ctes)
        _subst_query(qexpr.expression, parent_env, catalog, ctes)
        return
    env = build_env(qexpr, parent_env, catalog, ctes)
    # canonical renderings carry no table/derived aliases
    for item, _ in from_items_of(qexpr):
        if isinstance(item, (exp.Table, exp.Subquery)):
            item.set("alias", None)
        if isinstance(item, (exp.Subquery, exp.Paren)):
            _subst_query(item.this, None, catalog, ctes)
    for child in list(qexpr.iter_expressions()):
        if isinstance(child, exp.With):
            # CTE bodies substitute in their own scope
            for cte in child.expressions:
                _subst_query(cte.this, None, catalog, ctes)
            continue
        if isinstance(child, exp.From):
            continue
        if isinstance(child, exp.Join):
            on = child.args.get("on")
            if on is not None:
                _subst(on, env, None, catalog, ctes)
            continue
        _subst(child, env, None, catalog, ctes)


# -- scope construction -------------------------------------------------------


def register_ctes(qexpr, catalog, ctes):
    out = dict(ctes)
    with_ = qexpr.args.get("with_")
    if with_ is not None:
        for cte in with_.expressions:
            body_outs = outputs_of(cte.this, catalog, dict(out))
            cols = cte.args["alias"].args.get("columns")
            if cols:
                names = [ident(c) for c in cols]
                body_outs = [(names[i] if i < len(names) else n, c) for i, (n, c) in enumerate(body_outs)]
            out[ident(cte.args["alias"].this)] = (body_outs, cte.this)
    return out


def from_items_of(select):
    items = []
    from_ = select.args.get("from_")
    if from_ is not None:
        items.append((from_.this, None))
    for join in select.args.get("joins") or []:
        items.append((join.this, join))
    return items


def build_env(select, parent_env, catalog, ctes):
    env = Env(parent_env, catalog)
    env._ctes = ctes
    for item, _ in from_items_of(select):
        if isinstance(item, exp.Table):
            name = ident(item.args.get("alias")) or ident(item.this)
            tname = ident(item.this)
            if tname in ctes:
                outs, qexpr = ctes[tname]
                env.entries.append(OEntry(name, "rel", outputs=outs, qexpr=qexpr))
            else:
                env.entries.append(OEntry(name, "table", table=tname))
        elif isinstance(item, (exp.Subquery, exp.Paren)):
            inner = item.this
            alias = item.alias.lower() if isinstance(item, exp.Subquery) else ""
            outs = outputs_of(inner, catalog, dict(ctes))
            if isinstance(item, exp.Subquery) and item.args.get("alias") is not None:
                cols = item.args["alias"].args.get("columns")
                if cols:
                    names = [ident(c) for c in cols]
                    outs = [(names[i] if i < len(names) else n, c) for i, (n, c) in enumerate(outs)]
            env.entries.append(OEntry(alias, "rel", outputs=outs, qexpr=inner))
    return env


def outputs_of(qexpr, catalog, ctes):
    while isinstance(qexpr, (exp.Paren, exp.Subquery)):
        qexpr = qexpr.this
    ctes = register_ctes(qexpr, catalog, ctes)
    if isinstance(qexpr, exp.SetOperation):
        return outputs_of(qexpr.this, catalog, ctes)
    env = build_env(qexpr, None, catalog, ctes)
    outs = []
    for item in qexpr.expressions:
        if isinstance(item, exp.Alias):
            outs.append((ident(item.args.get("alias")), columns_in(item.this, env)))
        elif isinstance(item, exp.Column) and not isinstance(item.this, exp.Star):
            outs.append((ident(item.this), resolve_column(item, env)))
        elif isinstance(item, (exp.Star, exp.Column)):
            outs.extend(star_outputs(item, env))
        else:
            outs.append(("", columns_in(item, env)))
    return outs


def base_tables_of_entry(entry, catalog, ctes):
    if entry.kind == "table":
        return {entry.table}
    return base_tables_of_query(entry.qexpr, catalog, ctes, set())


def base_tables_of_query(qexpr, catalog, ctes, seen):
    if id(qexpr) in seen:
        return set()
    seen = seen | {id(qexpr)}
    out = set()
    for table in qexpr.find_all(exp.Table):
        name = ident(table.this)
        if name in ctes:
            out |= base_tables_of_query(ctes[name][1], catalog, ctes, seen)
        else:
            out.add(name)
    return out


# -- predicate decomposition --------------------------------------------------


def _unwrap(node):
    while isinstance(node, exp.Paren):
        node = node.this
    return node


def split_basic(node):
    """AND and OR both split; NOT over AND/OR De-Morgans; other NOTs stay."""
    node = _unwrap(node)
    if isinstance(node, (exp.And, exp.Or)):
        return split_basic(node.this) + split_basic(node.expression)
    if isinstance(node, exp.Not):
        inner = _unwrap(node.this)
        if isinstance(inner, (exp.And, exp.Or)):
            return split_basic(exp.Not(this=inner.this)) + split_basic(exp.Not(this=inner.expression))
        if isinstance(inner, exp.Not):
            return split_basic(inner.this)
    return [node]


def leaf_tuple(leaf, env, aliases=None):
    leaf = _unwrap(leaf)
    negated = False
    while isinstance(leaf, exp.Not):
        negated = not negated
        leaf = _unwrap(leaf.this)

    def r(e):
        return render(e, env, aliases)

    if isinstance(leaf, (exp.EQ, exp.NEQ)):
        tag = "=" if isinstance(leaf, exp.EQ) else "<>"
        if negated:
            tag = "<>" if tag == "=" else "="
        return [tag] + sorted([r(leaf.this), r(leaf.expression)])
    if isinstance(leaf, (exp.LT, exp.GT, exp.LTE, exp.GTE)):
        a, b = r(leaf.this), r(leaf.expression)
        kind = type(leaf).__name__
        if negated:  # NOT a<b  ==  a>=b, etc.
            kind = {"LT": "GTE", "GT": "LTE", "LTE": "GT", "GTE": "LT"}[kind]
        if kind == "GT":  # direction-normalize: a>b == b<a
            kind, a, b = "LT", b, a
        elif kind == "GTE":
            kind, a, b = "LTE", b, a
        return [{"LT": "<", "LTE": "<="}[kind], a, b]
    if isinstance(leaf, (exp.Like, exp.ILike)):
        tag = "LIKE" if isinstance(leaf, exp.Like) else "ILIKE"
        return [("NOT " + tag) if negated else tag, r(leaf.this), r(leaf.expression)]
    if isinstance(leaf, exp.Between):
        tag = "NOT BETWEEN" if negated else "BETWEEN"
        return [tag, r(leaf.this), r(leaf.args["low"]), r(leaf.args["high"])]
    if isinstance(leaf, exp.In):
        tag = "NOT IN" if negated else "IN"
        if leaf.args.get("query") is not None:
            return [tag, r(leaf.this), r(leaf.args["query"])]
        return [tag, r(leaf.this)] + sorted(r(e) for e in leaf.expressions)
    if isinstance(leaf, exp.Is):
        base_negated = bool(leaf.args.get("negate")) ^ negated
        if isinstance(_unwrap(leaf.expression), exp.Null):
            return ["IS NOT NULL" if base_negated else "IS NULL", r(leaf.this)]
        return ["IS NOT" if base_negated else "IS", r(leaf.this), r(leaf.expression)]
    if isinstance(leaf, exp.Exists):
        body = r(leaf.this)
        if not body.startswith("("):
            body = f"({body})"
        return ["NOT EXISTS" if negated else "EXISTS", body]
    if negated:
        return ["NOT", r(leaf)]
    return ["EXPR", r(leaf)]


def equality_column_pair(leaf):
    leaf = _unwrap(leaf)
    if isinstance(leaf, exp.EQ):
        a, b = _unwrap(leaf.this), _unwrap(leaf.expression)
        if (
            isinstance(a, exp.Column)
            and isinstance(b, exp.Column)
            and not isinstance(a.this, exp.Star)
            and not isinstance(b.this, exp.Star)
        ):
            return a, b
    return None


# -- per-statement extraction ---------------------------------------------------


class OracleRun:
    def __init__(self, catalog):
        self.catalog = catalog
        self.cols_select = []
        self.cols_all = []
        self.relations = []
        self.where_preds = []
        self.join_pairs = []
        self.aggregations = []
        self.functions = []
        self.func_expr_count = 0

    def analyze_query(self, qexpr, parent_env, ctes):
        while isinstance(qexpr, (exp.Paren, exp.Subquery)):
            qexpr = qexpr.this
        with_ = qexpr.args.get("with_")
        if with_ is not None:
            inner_ctes = dict(ctes)
            for cte in with_.expressions:
                self.analyze_query(cte.this, None, dict(inner_ctes))
                inner_ctes = register_ctes_single(cte, self.catalog, inner_ctes)
            ctes = inner_ctes
        if isinstance(qexpr, exp.SetOperation):
            self.analyze_query_no_with(qexpr.this, parent_env, ctes)
            self.analyze_query_no_with(qexpr.expression, parent_env, ctes)
            return
        self.analyze_select(qexpr, parent_env, ctes)

    def analyze_query_no_with(self, qexpr, parent_env, ctes):
        while isinstance(qexpr, (exp.Paren, exp.Subquery)):
            qexpr = qexpr.this
        if isinstance(qexpr, exp.SetOperation) or qexpr.args.get("with_") is not None:
            self.analyze_query(qexpr, parent_env, ctes)
        else:
            self.analyze_select(qexpr, parent_env, ctes)

    def analyze_select(self, select, parent_env, ctes):
        env = build_env(select, parent_env, self.catalog, ctes)
        items = from_items_of(select)

        for item, _ in items:
            if isinstance(item, exp.Table) and ident(item.this) not in ctes:
                self.relations.append(ident(item.this))
            elif isinstance(item, (exp.Subquery, exp.Paren)):
                self.analyze_query(item.this, None, dict(ctes))

        aliases = {}
        item_sets = []
        for item in select.expressions:
            cs = columns_in(item, env)
            item_sets.append(cs)
            if isinstance(item, exp.Alias):
                aliases[ident(item.args.get("alias"))] = cs
            if isinstance(item, exp.Star) or (isinstance(item, exp.Column) and isinstance(item.this, exp.Star)):
                cs = set()
                for _, canon in star_outputs(item, env):
                    cs |= canon
            self.cols_select.extend(sorted(cs))
            self.cols_all.extend(sorted(cs))
            if self.has_function(item):
                self.func_expr_count += 1
            self.descend(item, env, ctes)

        for item, join in items:
            if join is None:
                continue
            if join.args.get("on") is not None:
                on = join.args["on"]
                self.cols_all.extend(sorted(columns_in(on, env)))
                self.descend(on, env, ctes)
            for using in join.args.get("using") or []:
                name = ident(using.this) if isinstance(using, exp.Column) else ident(using)
                canon = set()
                for entry in env.entries:
                    if entry.kind == "table" and entry.table in self.catalog and name in self.catalog[entry.table]:
                        canon.add(f"{entry.table}.{name}")
                    elif entry.kind == "rel":
                        for out_name, oc in entry.outputs:
                            if out_name == name:
                                canon |= oc
                self.cols_all.extend(sorted(canon))

        where = select.args.get("where")
        having = select.args.get("having")
        for clause, amap in ((where, None), (having, aliases)):
            if clause is None:
                continue
            for leaf in split_basic(clause.this):
                self.where_preds.append(leaf_tuple(leaf, env, amap))
                if self.has_function(leaf):
                    self.func_expr_count += 1
            self.cols_all.extend(sorted(columns_in(clause.this, env, amap)))
            self.descend(clause.this, env, ctes)

        group = select.args.get("group")
        group_cols = set()
        if group is not None:
            gitems = list(group.expressions)
            for key in ("rollup", "cube", "grouping_sets"):
                gitems.extend(group.args.get(key) or [])
            for gi in gitems:
                if isinstance(gi, exp.Literal) and not gi.args.get("is_string"):
                    pos = int(gi.name)
                    cs = item_sets[pos - 1] if 1 <= pos <= len(item_sets) else set()
                else:
                    cs = columns_in(gi, env, aliases)
                    if self.has_function(gi):
                        self.func_expr_count += 1
                group_cols |= cs
                self.cols_all.extend(sorted(cs))
                self.descend(gi, env, ctes)

        self.collect_join_pairs(select, items, env, ctes)

        for node in walk_local(select):
            if (
                isinstance(node, exp.AggFunc)
                and not isinstance(node, NON_AGGREGATES)
                and not (isinstance(node.parent, exp.Window) and node.parent.this is node)
            ):
                arg = node.this
                if arg is None:
                    expr_text = ""
                elif isinstance(arg, exp.Star):
                    expr_text = "*"
                else:
                    parts = [render(arg, env, aliases)]
                    parts += [render(e, env, aliases) for e in node.expressions]
                    expr_text = ", ".join(parts)
                self.aggregations.append([func_name(node), expr_text, sorted(group_cols)])
            if is_function(node):
                self.functions.append(func_name(node))

        order = select.args.get("order")
        if order is not None:
            for oi in order.expressions:
                self.descend(oi, env, ctes)
        qualify = select.args.get("qualify")
        if qualify is not None:
            self.descend(qualify.this, env, ctes)

    # join graph -------------------------------------------------------------

    def collect_join_pairs(self, select, items, env, ctes):
        def owner(col):
            try:
                return env.lookup(ident(col.args.get("table")), ident(col.this))
            except OracleUnresolved:
                return None

        def col_tables(canon, entry):
            tables = {c.rpartition(".")[0] for c in canon}
            tables = {t for t in tables if t and not t.startswith("_q")}
            if tables:
                return tables
            return base_tables_of_entry(entry, self.catalog, ctes)

        def add_edges(leaf):
            pair = equality_column_pair(leaf)
            if pair is None:
                return False
            hits = [owner(c) for c in pair]
            if any(h is None or h[1] is None for h in hits):
                return False
            (canon_a, entry_a), (canon_b, entry_b) = hits
            if entry_a is entry_b:
                return False
            added = False
            for ta in col_tables(canon_a, entry_a):
                for tb in col_tables(canon_b, entry_b):
                    self.join_pairs.append(sorted([ta, tb]))
                    added = True
            return added

        where = select.args.get("where")
        if where is not None:
            for leaf in split_basic(where.this):
                add_edges(leaf)

        for index, (item, join) in enumerate(items):
            if join is None:
                continue
            explicit = bool(
                join.args.get("on") or join.args.get("using") or join.args.get("side") or join.args.get("kind")
            )
            if not explicit:
                continue
            entry = env.entries[index]
            on = join.args.get("on")
            got_edge = False
            if on is not None:
                for leaf in split_basic(on):
                    if add_edges(leaf):
                        got_edge = True
                if not got_edge:
                    partners = set()
                    for node in walk_local(on):
                        if isinstance(node, exp.Column) and not isinstance(node.this, exp.Star):
                            hit = owner(node)
                            if hit is not None and hit[1] is not None and hit[1] is not entry:
                                partners.add(id(hit[1]))
                                for ta in base_tables_of_entry(entry, self.catalog, ctes):
                                    for tb in col_tables(*hit):
                                        self.join_pairs.append(sorted([ta, tb]))
                                        got_edge = True
            for using in join.args.get("using") or []:
                name = ident(using.this) if isinstance(using, exp.Column) else ident(using)
                for other in env.entries:
                    if other is entry:
                        continue
                    knows = (
                        other.kind == "table"
                        and other.table in self.catalog
                        and name in self.catalog[other.table]
                    ) or (other.kind == "rel" and any(n == name for n, _ in other.outputs))
                    if knows:
                        for ta in base_tables_of_entry(entry, self.catalog, ctes):
                            for tb in base_tables_of_entry(other, self.catalog, ctes):
                                self.join_pairs.append(sorted([ta, tb]))
                        got_edge = True
            if not got_edge and index > 0 and (on is not None or join.args.get("side") or join.args.get("kind")):
                prev = env.entries[index - 1]
                for ta in base_tables_of_entry(entry, self.catalog, ctes):
                    for tb in base_tables_of_entry(prev, self.catalog, ctes):
                        self.join_pairs.append(sorted([ta, tb]))

    def descend(self, expr, env, ctes):
        for child in expr.iter_expressions():
            if isinstance(child, QUERY):
                self.analyze_query(child, env, dict(ctes))
            else:
                self.descend(child, env, ctes)

    def has_function(self, expr):
        return any(is_function(node) for node in walk_local(expr))


def register_ctes_single(cte, catalog, ctes):
    out = dict(ctes)
    body_outs = outputs_of(cte.this, catalog, dict(ctes))
    cols = cte.args["alias"].args.get("columns")
    if cols:
        names = [ident(c) for c in cols]
        body_outs = [(names[i] if i < len(names) else n, c) for i, (n, c) in enumerate(body_outs)]
    out[ident(cte.args["alias"].this)] = (body_outs, cte.this)
    return out


def oracle_features(sql: str, catalog: dict[str, list[str]]) -> dict:
    ast = sqlglot.parse_one(sql, read="postgres")
    while isinstance(ast, (exp.Paren, exp.Subquery)):
        ast = ast.this
    run = OracleRun(catalog)
    run.analyze_query(ast, None, {})

    def dedupe(values):
        return sorted(set(values))

    def freeze(item):
        return tuple(tuple(v) if isinstance(v, list) else v for v in item)

    def dedupe_lists(values):
        return sorted({freeze(item): item for item in values}.values(), key=freeze)

    return {
        "cols_select": dedupe(run.cols_select),
        "cols_all": dedupe(run.cols_all),
        "relations": dedupe(run.relations),
        "where_preds": dedupe_lists(run.where_preds),
        "join_pairs": dedupe_lists(run.join_pairs),
        "aggregations": dedupe_lists(run.aggregations),
        "functions": dedupe(run.functions),
        "cte_count": len(list(ast.find_all(exp.CTE))),
        "subquery_count": len(list(ast.find_all(exp.Select))) - 1,
        "func_expr_count": run.func_expr_count,
    }
