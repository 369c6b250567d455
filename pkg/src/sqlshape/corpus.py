"""Corpus complexity profiling: per-metric histograms and normalized means.

Six per-query metrics: basic WHERE predicates, CTEs, distinct columns in
all clause positions, function-bearing expressions, subqueries, and join
pairs.  Histograms bin on exact integer counts (lossless; plotting tools
may rebin).  Cross-corpus comparison divides each corpus mean by a
baseline corpus's mean, metric by metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .features import FeatureVector, feature_vector
from .frontend import QueryTree

# Metric name -> FeatureVector accessor.  The column metric is named
# explicitly for its all-positions definition to avoid conflation with
# the select-expression column feature used in similarity.
METRICS: dict[str, Callable[[FeatureVector], int]] = {
    "where_predicates": lambda fv: fv.count("where_preds"),
    "ctes": lambda fv: fv.cte_count,
    "columns(all-positions)": lambda fv: fv.count("cols_all"),
    "function_expressions": lambda fv: fv.func_expr_count,
    "subqueries": lambda fv: fv.subquery_count,
    "joins": lambda fv: fv.count("join_pairs"),
}

DEFAULT_METRICS = tuple(METRICS)


@dataclass
class CorpusStats:
    """Per-metric histograms and means for one corpus."""

    corpus: str
    per_metric_histogram: dict[str, dict[int, int]]
    per_metric_mean: dict[str, float]
    n_queries: int
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (query_id, reason)


@dataclass
class NormalizedMeans:
    """Corpus means divided by the baseline corpus's means."""

    baseline: str
    per_corpus: dict[str, dict[str, float]]
    dropped: list[str] = field(default_factory=list)  # zero-baseline metrics


def metric_values(fv: FeatureVector, metrics: Sequence[str] = DEFAULT_METRICS) -> dict[str, int]:
    return {name: METRICS[name](fv) for name in metrics}


def corpus_stats(
    queries: Iterable[QueryTree],
    corpus: str,
    metrics: Sequence[str] = DEFAULT_METRICS,
    skipped: Sequence[tuple[str, str]] = (),
) -> CorpusStats:
    """Histogram and average the metrics over resolved query trees.

    Unparseable inputs are the caller's problem (filtered upstream with
    diagnostics); pass them through ``skipped`` so the stats record how
    many queries the corpus lost.
    """
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    histograms: dict[str, dict[int, int]] = {name: {} for name in metrics}
    totals = {name: 0 for name in metrics}
    n = 0
    for tree in queries:
        fv = feature_vector(tree)
        n += 1
        for name, value in metric_values(fv, metrics).items():
            histogram = histograms[name]
            histogram[value] = histogram.get(value, 0) + 1
            totals[name] += value
    means = {name: (totals[name] / n if n else 0.0) for name in metrics}
    return CorpusStats(
        corpus=corpus,
        per_metric_histogram={name: dict(sorted(h.items())) for name, h in histograms.items()},
        per_metric_mean=means,
        n_queries=n,
        skipped=list(skipped),
    )


def stats_from_vectors(
    vectors: Iterable[FeatureVector],
    corpus: str,
    metrics: Sequence[str] = DEFAULT_METRICS,
    skipped: Sequence[tuple[str, str]] = (),
) -> CorpusStats:
    """Same as :func:`corpus_stats` for already-extracted vectors."""
    histograms: dict[str, dict[int, int]] = {name: {} for name in metrics}
    totals = {name: 0 for name in metrics}
    n = 0
    for fv in vectors:
        n += 1
        for name, value in metric_values(fv, metrics).items():
            histogram = histograms[name]
            histogram[value] = histogram.get(value, 0) + 1
            totals[name] += value
    means = {name: (totals[name] / n if n else 0.0) for name in metrics}
    return CorpusStats(
        corpus=corpus,
        per_metric_histogram={name: dict(sorted(h.items())) for name, h in histograms.items()},
        per_metric_mean=means,
        n_queries=n,
        skipped=list(skipped),
    )


def normalize_means(
    stats: list[CorpusStats],
    baseline: str,
    metrics: Sequence[str] | None = None,
) -> NormalizedMeans:
    """Divide every corpus mean by the baseline corpus's mean, metric-wise.

    A metric whose baseline mean is zero cannot be normalized; it is
    dropped and recorded in ``dropped`` rather than raised, so one flat
    metric does not sink a whole report.
    """
    by_name = {s.corpus: s for s in stats}
    if baseline not in by_name:
        raise ValueError(f"baseline corpus {baseline!r} not in stats")
    base = by_name[baseline]
    names = list(metrics) if metrics is not None else list(base.per_metric_mean)
    dropped = [name for name in names if base.per_metric_mean.get(name, 0.0) == 0.0]
    kept = [name for name in names if name not in dropped]
    per_corpus = {
        s.corpus: {name: s.per_metric_mean[name] / base.per_metric_mean[name] for name in kept}
        for s in stats
    }
    return NormalizedMeans(baseline=baseline, per_corpus=per_corpus, dropped=dropped)
