"""Scikit-learn style transformers over raw SQL text.

Two estimators wrap the functional core so SQL analysis composes with
sklearn pipelines and the wider numpy ecosystem:

* :class:`SqlFeatureExtractor` maps an iterable of SQL strings to
  :class:`~sqlshape.features.FeatureVector` objects (think CountVectorizer
  whose vocabulary is the schema catalog learned from DDL in ``fit``);
* :class:`SqlComplexityMetrics` maps SQL strings to a numeric matrix of
  the per-query complexity metrics, one column per metric.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import DEFAULT_METRICS, METRICS, metric_values
from .errors import SqlShapeError
from .features import FeatureVector, feature_vector
from .frontend import DEFAULT_DIALECT, parse
from .resolve import resolve
from .schema import EMPTY_CATALOG, SchemaCatalog, ingest_ddl


def _check_sql_sequence(X) -> list[str]:
    if isinstance(X, str):
        raise TypeError("X must be an iterable of SQL strings, not a single string")
    items = list(X)
    for i, item in enumerate(items):
        if not isinstance(item, str):
            raise TypeError(f"X[{i}] is {type(item).__name__}, expected str")
    return items


class SqlFeatureExtractor(TransformerMixin, BaseEstimator):
    """Extract structural feature vectors from SQL statements.

    Parameters
    ----------
    ddl : str, optional
        CREATE TABLE statements; ``fit`` ingests them into the schema
        catalog used for alias/star resolution.  Without DDL the
        extractor runs schemaless.
    dialect : str, default "postgres"
        SQL dialect tag for the parser.
    multiset : bool, default False
        Keep duplicate bag items instead of deduplicating.
    strict : bool, default False
        Raise on ambiguous bare column names instead of marking them
        unresolved.

    Attributes
    ----------
    catalog_ : SchemaCatalog
        The ingested catalog (empty in schemaless mode).
    """

    def __init__(self, ddl=None, dialect=DEFAULT_DIALECT, multiset=False, strict=False):
        self.ddl = ddl
        self.dialect = dialect
        self.multiset = multiset
        self.strict = strict

    def fit(self, X=None, y=None):
        """Ingest the DDL into a schema catalog; X is unused."""
        if isinstance(self.ddl, SchemaCatalog):
            self.catalog_ = self.ddl
        elif self.ddl:
            self.catalog_ = ingest_ddl(self.ddl, dialect=self.dialect)
        else:
            self.catalog_ = EMPTY_CATALOG
        return self

    def transform(self, X) -> list[FeatureVector]:
        """Parse, resolve, and featurize each SQL string in X."""
        check_is_fitted(self, "catalog_")
        out = []
        for sql in _check_sql_sequence(X):
            tree = resolve(parse(sql, dialect=self.dialect), self.catalog_, strict=self.strict)
            out.append(feature_vector(tree, multiset=self.multiset))
        return out


class SqlComplexityMetrics(TransformerMixin, BaseEstimator):
    """Turn SQL statements into a (n_queries, n_metrics) count matrix.

    Parameters
    ----------
    ddl : str, optional
        CREATE TABLE statements for resolution; optional.
    metrics : tuple of str
        Metric names (see ``sqlshape.corpus.METRICS``); the default is
        all six complexity metrics.
    dialect : str, default "postgres"
    lenient : bool, default False
        Emit an all-NaN row for a query that fails to parse instead of
        raising.
    """

    def __init__(self, ddl=None, metrics=DEFAULT_METRICS, dialect=DEFAULT_DIALECT, lenient=False):
        self.ddl = ddl
        self.metrics = metrics
        self.dialect = dialect
        self.lenient = lenient

    def fit(self, X=None, y=None):
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        if isinstance(self.ddl, SchemaCatalog):
            self.catalog_ = self.ddl
        elif self.ddl:
            self.catalog_ = ingest_ddl(self.ddl, dialect=self.dialect)
        else:
            self.catalog_ = EMPTY_CATALOG
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "catalog_")
        rows = []
        for sql in _check_sql_sequence(X):
            try:
                tree = resolve(parse(sql, dialect=self.dialect), self.catalog_)
                values = metric_values(feature_vector(tree), self.metrics)
                rows.append([float(values[name]) for name in self.metrics])
            except SqlShapeError:
                if not self.lenient:
                    raise
                rows.append([np.nan] * len(self.metrics))
        return np.asarray(rows, dtype=float).reshape(len(rows), len(self.metrics))

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.metrics, dtype=object)
