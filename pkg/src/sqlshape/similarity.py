"""Fuzzy query comparison: per-feature Jaccard coefficients.

A generated query is compared with its gold query feature by feature.
With set-valued bags the coefficient is |a n b| / |a u b|; with multiset
bags the counts generalize to min/max sums.  Two empty bags count as a
perfect match (1.0): queries that both use no CTEs, say, agree on that
feature.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyInput
from .features import BAG_FEATURES, FeatureVector, feature_vector
from .frontend import QueryTree

DEFAULT_FEATURES = BAG_FEATURES

# Failed-generation policies for corpus summaries.
POLICY_EXCLUDE = "exclude-failed"
POLICY_ZERO = "zero-failed"


@dataclass(frozen=True)
class SimilarityReport:
    """Per-feature coefficients for one (generated, gold) pair."""

    query_id: str
    per_feature: dict[str, float]
    generated_parsed: bool = True


@dataclass(frozen=True)
class ModelSimilaritySummary:
    """Arithmetic per-feature means over one model's compared queries."""

    model: str
    per_feature_mean: dict[str, float]
    n_compared: int
    policy: str = POLICY_EXCLUDE


def jaccard(a, b) -> float:
    """Jaccard coefficient of two bags; both-empty returns 1.0."""
    if isinstance(a, Counter) or isinstance(b, Counter):
        a = a if isinstance(a, Counter) else Counter(a)
        b = b if isinstance(b, Counter) else Counter(b)
        intersection = sum((a & b).values())
        union = sum((a | b).values())
    else:
        a, b = frozenset(a), frozenset(b)
        intersection = len(a & b)
        union = len(a | b)
    if union == 0:
        return 1.0
    return intersection / union


def compare_vectors(
    generated: FeatureVector,
    gold: FeatureVector,
    features: tuple[str, ...] = DEFAULT_FEATURES,
    query_id: str = "",
) -> SimilarityReport:
    per_feature = {name: jaccard(generated.bag(name), gold.bag(name)) for name in features}
    return SimilarityReport(query_id=query_id, per_feature=per_feature)


def compare(
    generated: QueryTree,
    gold: QueryTree,
    features: tuple[str, ...] = DEFAULT_FEATURES,
    query_id: str = "",
    multiset: bool = False,
) -> SimilarityReport:
    """Feature-wise Jaccard between two resolved trees.

    Numeric features are never compared here; they belong to complexity
    reports.  Both trees should be resolved against the same catalog.
    """
    return compare_vectors(
        feature_vector(generated, multiset=multiset),
        feature_vector(gold, multiset=multiset),
        features=features,
        query_id=query_id,
    )


def failed_report(query_id: str, features: tuple[str, ...] = DEFAULT_FEATURES) -> SimilarityReport:
    """Report for a generation that did not produce a comparable query."""
    return SimilarityReport(
        query_id=query_id,
        per_feature={name: 0.0 for name in features},
        generated_parsed=False,
    )


def summarize(
    reports: list[SimilarityReport],
    model: str,
    policy: str = POLICY_EXCLUDE,
) -> ModelSimilaritySummary:
    """Per-feature arithmetic means over the compared reports.

    ``exclude-failed`` drops unparsed generations from the mean (their
    count is still recoverable as len(reports) - n_compared);
    ``zero-failed`` keeps them as all-zero rows.
    """
    if policy not in (POLICY_EXCLUDE, POLICY_ZERO):
        raise ValueError(f"unknown policy {policy!r}")
    included = [r for r in reports if r.generated_parsed or policy == POLICY_ZERO]
    if not included:
        raise EmptyInput("no reports to summarize")
    names: list[str] = list(included[0].per_feature)
    means = {
        name: sum(r.per_feature.get(name, 0.0) for r in included) / len(included)
        for name in names
    }
    return ModelSimilaritySummary(
        model=model,
        per_feature_mean=means,
        n_compared=len(included),
        policy=policy,
    )
