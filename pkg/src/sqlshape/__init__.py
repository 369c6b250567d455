"""Structural feature extraction, complexity profiling, and fuzzy
similarity scoring for SQL workloads."""

from .errors import (
    AmbiguousColumn,
    DuplicateTable,
    EmptyInput,
    LlmUnavailable,
    MultipleStatements,
    ParseFailure,
    SqlShapeError,
    UnsupportedConstruct,
    ValidatorUnavailable,
    ZeroBaseline,
)
from .features import (
    AggTuple,
    FeatureVector,
    PredicateTuple,
    count_ctes,
    count_func_exprs,
    extract_aggregations,
    extract_all_columns,
    extract_functions,
    extract_join_pairs,
    extract_relations,
    extract_select_columns,
    extract_where_predicates,
    feature_vector,
)
from .frontend import QueryNode, QueryTree, enumerate_subqueries, parse, parse_script, split_statements
from .resolve import CanonicalColumn, expand_stars, resolve
from .schema import SchemaCatalog, ingest_ddl

__version__ = "0.1.0"

__all__ = [
    "AggTuple",
    "AmbiguousColumn",
    "CanonicalColumn",
    "DuplicateTable",
    "EmptyInput",
    "FeatureVector",
    "LlmUnavailable",
    "MultipleStatements",
    "ParseFailure",
    "PredicateTuple",
    "QueryNode",
    "QueryTree",
    "SchemaCatalog",
    "SqlShapeError",
    "UnsupportedConstruct",
    "ValidatorUnavailable",
    "ZeroBaseline",
    "count_ctes",
    "count_func_exprs",
    "enumerate_subqueries",
    "expand_stars",
    "extract_aggregations",
    "extract_all_columns",
    "extract_functions",
    "extract_join_pairs",
    "extract_relations",
    "extract_select_columns",
    "extract_where_predicates",
    "feature_vector",
    "ingest_ddl",
    "parse",
    "parse_script",
    "resolve",
    "split_statements",
]
