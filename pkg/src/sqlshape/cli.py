"""Command-line entry point.

Subcommands: analyze, compare, corpus-stats, radar, generate, validate.
All outputs are deterministic (stable sorting everywhere, fixed CSV
dialect, atomic writes); exit codes: 0 full success, 1 partial failure
with per-item diagnostics on stderr, 2 usage error.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from ._io import metric_filename, read_manifest, render_csv, write_text_atomic
from .corpus import DEFAULT_METRICS, METRICS, normalize_means, stats_from_vectors
from .errors import SqlShapeError
from .features import BAG_FEATURES, feature_vector
from .frontend import DEFAULT_DIALECT, parse, split_statements
from .harness import (
    build_llm_client,
    build_validator_client,
    load_config,
    run_manifest,
    success_table,
)
from .resolve import resolve
from .schema import EMPTY_CATALOG, ingest_ddl
from .similarity import POLICY_EXCLUDE, POLICY_ZERO, compare_vectors, summarize


def _load_catalog(ddl_path: str | None, dialect: str):
    if not ddl_path:
        return EMPTY_CATALOG
    return ingest_ddl(Path(ddl_path).read_text(encoding="utf-8"), dialect=dialect)


def _iter_statements(paths: list[str]) -> list[tuple[str, str]]:
    """(query_id, sql) pairs; multi-statement files get :n suffixes."""
    out: list[tuple[str, str]] = []
    for raw_path in paths:
        path = Path(raw_path)
        statements = split_statements(path.read_text(encoding="utf-8"))
        if len(statements) == 1:
            out.append((path.stem, statements[0]))
        else:
            out.extend((f"{path.stem}:{i}", sql) for i, sql in enumerate(statements, start=1))
    return out


def _manifest_statements(manifest: str) -> list[tuple[str, str]]:
    rows = read_manifest(manifest, ["query_id", "path"])
    out = []
    for row in rows:
        statements = split_statements(Path(row["path"]).read_text(encoding="utf-8"))
        if len(statements) == 1:
            out.append((row["query_id"], statements[0]))
        else:
            out.extend((f"{row['query_id']}:{i}", sql) for i, sql in enumerate(statements, start=1))
    return out


def _metric_list(value: str | None) -> tuple[str, ...]:
    if not value:
        return DEFAULT_METRICS
    names = tuple(name.strip() for name in value.split(",") if name.strip())
    unknown = set(names) - set(METRICS)
    if unknown:
        raise click.UsageError(f"unknown metrics: {sorted(unknown)}; known: {list(METRICS)}")
    return names


@click.group()
def main() -> None:
    """Structural analysis, similarity scoring, and generation harness
    for SQL workloads."""


@main.command()
@click.argument("sql_files", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), help="CSV with query_id,path columns.")
@click.option("--ddl", "ddl_path", type=click.Path(exists=True, dir_okay=False), help="CREATE TABLE statements for resolution.")
@click.option("--dialect", default=DEFAULT_DIALECT, show_default=True)
@click.option("--multiset", is_flag=True, help="Keep duplicate bag items.")
@click.option("--lenient", is_flag=True, help="Skip unparseable queries with a diagnostic instead of failing.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Write one <query_id>.json per query instead of stdout.")
def analyze(sql_files, manifest, ddl_path, dialect, multiset, lenient, out_dir):
    """Emit one FeatureVector JSON document per query."""
    if not sql_files and not manifest:
        raise click.UsageError("provide SQL files or --manifest")
    catalog = _load_catalog(ddl_path, dialect)
    statements = list(_iter_statements(list(sql_files)))
    if manifest:
        statements += _manifest_statements(manifest)
    statements.sort(key=lambda pair: pair[0])

    failures = 0
    documents: list[tuple[str, str]] = []
    for query_id, sql in statements:
        try:
            tree = resolve(parse(sql, dialect=dialect), catalog)
            payload = {"query_id": query_id, **feature_vector(tree, multiset=multiset).to_dict()}
        except SqlShapeError as err:
            failures += 1
            click.echo(f"{query_id}: {err}", err=True)
            if not lenient:
                sys.exit(1)
            continue
        documents.append((query_id, json.dumps(payload, indent=2, ensure_ascii=False) + "\n"))

    if out_dir:
        for query_id, text in documents:
            write_text_atomic(Path(out_dir) / f"{query_id}.json", text)
    else:
        for _, text in documents:
            click.echo(text, nl=False)
    sys.exit(1 if failures else 0)


@main.command()
@click.argument("generated", required=False, type=click.Path(exists=True, dir_okay=False))
@click.argument("gold", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), help="CSV with query_id,generated_path,gold_path columns.")
@click.option("--ddl", "ddl_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--dialect", default=DEFAULT_DIALECT, show_default=True)
@click.option("--multiset", is_flag=True)
@click.option("--model", default="", help="Model label for the summary row.")
@click.option("--policy", type=click.Choice([POLICY_EXCLUDE, POLICY_ZERO]), default=POLICY_EXCLUDE, show_default=True, help="How failed generations enter the mean.")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), help="Write the CSV here instead of stdout.")
def compare(generated, gold, manifest, ddl_path, dialect, multiset, model, policy, out_file):
    """Per-feature Jaccard similarity of generated vs gold queries.

    Column order: query_id, then the seven bag features, fixed.  The last
    row is the per-feature arithmetic mean over compared queries.
    """
    if manifest:
        pairs = [
            (row["query_id"], Path(row["generated_path"]), Path(row["gold_path"]))
            for row in read_manifest(manifest, ["query_id", "generated_path", "gold_path"])
        ]
    elif generated and gold:
        pairs = [(Path(generated).stem, Path(generated), Path(gold))]
    else:
        raise click.UsageError("provide GENERATED GOLD files or --manifest")
    pairs.sort(key=lambda triple: triple[0])

    catalog = _load_catalog(ddl_path, dialect)
    from .similarity import failed_report

    reports = []
    failures = 0
    for query_id, generated_path, gold_path in pairs:
        gold_tree = resolve(parse(Path(gold_path).read_text(encoding="utf-8").strip().rstrip(";"), dialect=dialect), catalog)
        gold_fv = feature_vector(gold_tree, multiset=multiset)
        try:
            generated_tree = resolve(
                parse(Path(generated_path).read_text(encoding="utf-8").strip().rstrip(";"), dialect=dialect), catalog
            )
            generated_fv = feature_vector(generated_tree, multiset=multiset)
        except SqlShapeError as err:
            failures += 1
            click.echo(f"{query_id}: generated query failed to parse: {err}", err=True)
            reports.append(failed_report(query_id))
            continue
        reports.append(compare_vectors(generated_fv, gold_fv, query_id=query_id))

    summary = summarize(reports, model=model, policy=policy)
    header = ["query_id", *BAG_FEATURES]
    rows: list[list] = []
    for report in reports:
        if report.generated_parsed or policy == POLICY_ZERO:
            rows.append([report.query_id] + [f"{report.per_feature[f]:.6f}" for f in BAG_FEATURES])
        else:
            rows.append([report.query_id] + ["" for _ in BAG_FEATURES])
    rows.append(["mean"] + [f"{summary.per_feature_mean[f]:.6f}" for f in BAG_FEATURES])
    text = render_csv(header, rows)
    click.echo(f"n_compared={summary.n_compared} policy={summary.policy}", err=True)
    if out_file:
        write_text_atomic(out_file, text)
    else:
        click.echo(text, nl=False)
    sys.exit(1 if failures else 0)


@main.command("corpus-stats")
@click.argument("sql_files", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), help="CSV with query_id,path columns.")
@click.option("--corpus", default="corpus", show_default=True, help="Corpus name stamped into outputs.")
@click.option("--ddl", "ddl_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--dialect", default=DEFAULT_DIALECT, show_default=True)
@click.option("--metrics", "metrics_csv", help="Comma-separated metric subset.")
@click.option("--lenient", is_flag=True, help="Skip unparseable queries with a diagnostic instead of failing.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def corpus_stats_cmd(sql_files, manifest, corpus, ddl_path, dialect, metrics_csv, lenient, out_dir):
    """Per-metric histograms and means for a corpus of queries.

    Writes one <metric>.csv (corpus,count_value,frequency) per metric
    plus means.csv (corpus,metric,mean,n_queries,skipped).
    """
    if not sql_files and not manifest:
        raise click.UsageError("provide SQL files or --manifest")
    metrics = _metric_list(metrics_csv)
    catalog = _load_catalog(ddl_path, dialect)
    statements = list(_iter_statements(list(sql_files)))
    if manifest:
        statements += _manifest_statements(manifest)
    statements.sort(key=lambda pair: pair[0])

    vectors = []
    skipped: list[tuple[str, str]] = []
    for query_id, sql in statements:
        try:
            tree = resolve(parse(sql, dialect=dialect), catalog)
            vectors.append(feature_vector(tree))
        except SqlShapeError as err:
            skipped.append((query_id, str(err)))
            click.echo(f"{query_id}: {err}", err=True)
            if not lenient:
                sys.exit(1)

    stats = stats_from_vectors(vectors, corpus, metrics=metrics, skipped=skipped)
    for metric in metrics:
        rows = [
            [corpus, count_value, frequency]
            for count_value, frequency in sorted(stats.per_metric_histogram[metric].items())
        ]
        write_text_atomic(Path(out_dir) / f"{metric_filename(metric)}.csv", render_csv(["corpus", "count_value", "frequency"], rows))
    means_rows = [
        [corpus, metric, f"{stats.per_metric_mean[metric]:.6f}", stats.n_queries, len(stats.skipped)]
        for metric in metrics
    ]
    write_text_atomic(Path(out_dir) / "means.csv", render_csv(["corpus", "metric", "mean", "n_queries", "skipped"], means_rows))
    sys.exit(1 if skipped else 0)


@main.command()
@click.argument("means_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--baseline", required=True, help="Corpus name to normalize against.")
@click.option("--metrics", "metrics_csv", help="Comma-separated metric subset.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV.")
@click.option("--out", "out_file", type=click.Path(dir_okay=False))
def radar(means_files, baseline, metrics_csv, as_json, out_file):
    """Normalize corpus means against a baseline (radar-plot data).

    Input: means.csv files produced by corpus-stats (several corpora may
    live in one file).  Output: corpus,metric,normalized_mean rows or the
    equivalent JSON object.
    """
    from .corpus import CorpusStats

    means: dict[str, dict[str, float]] = {}
    for path in means_files:
        with open(path, encoding="utf-8", newline="") as handle:
            for row in csv.DictReader(handle):
                means.setdefault(row["corpus"], {})[row["metric"]] = float(row["mean"])
    stats = [
        CorpusStats(corpus=name, per_metric_histogram={}, per_metric_mean=mm, n_queries=0)
        for name, mm in sorted(means.items())
    ]
    if baseline not in means:
        raise click.UsageError(f"baseline {baseline!r} not present; corpora: {sorted(means)}")
    selected = list(_metric_list(metrics_csv)) if metrics_csv else None
    normalized = normalize_means(stats, baseline, metrics=selected)
    for metric in normalized.dropped:
        click.echo(f"dropped metric with zero baseline mean: {metric}", err=True)
    if as_json:
        payload = {
            "baseline": normalized.baseline,
            "per_corpus": {c: dict(sorted(m.items())) for c, m in sorted(normalized.per_corpus.items())},
            "dropped": normalized.dropped,
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        rows = [
            [corpus_name, metric, f"{value:.6f}"]
            for corpus_name, metric_means in sorted(normalized.per_corpus.items())
            for metric, value in sorted(metric_means.items())
        ]
        text = render_csv(["corpus", "metric", "normalized_mean"], rows)
    if out_file:
        write_text_atomic(out_file, text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False), help="CSV with query_id,question columns.")
@click.option("--ddl", "ddl_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Harness TOML config.")
@click.option("--model", default=None, help="Model label override for records.")
@click.option("--max-retries", type=int, default=None, help="Override [run].max_retries.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def generate(manifest, ddl_path, config_path, model, max_retries, out_dir):
    """Generate SQL for each question, validating with retries.

    Writes one GenerationRecord JSON per query plus success_table.csv.
    """
    config = load_config(config_path)
    base_dir = Path(config_path).parent
    ddl = Path(ddl_path).read_text(encoding="utf-8")
    catalog = ingest_ddl(ddl)
    entries = [
        (row["query_id"], row["question"]) for row in read_manifest(manifest, ["query_id", "question"])
    ]
    llm = build_llm_client(config, base_dir=base_dir)
    validator = build_validator_client(config, catalog, base_dir=base_dir)
    records = run_manifest(
        entries,
        ddl,
        llm,
        validator,
        max_retries=config.max_retries if max_retries is None else max_retries,
        parallelism=config.parallelism,
        model=model if model is not None else config.model,
        sampling=config.sampling,
    )
    for record in records:
        write_text_atomic(Path(out_dir) / f"{record.query_id}.json", record.to_json())
    table = success_table(records)
    rows = [[m, s, t, table.render(m)] for m, (s, t) in table.rows.items()]
    write_text_atomic(Path(out_dir) / "success_table.csv", render_csv(["model", "successes", "total", "display"], rows))
    n_failed = sum(1 for r in records if not r.success)
    click.echo(f"records={len(records)} failed={n_failed}", err=True)
    sys.exit(1 if n_failed else 0)


@main.command()
@click.argument("sql_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--ddl", "ddl_path", type=click.Path(exists=True, dir_okay=False), help="Validate against this schema with the catalog validator.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Use the validator from this harness config.")
@click.option("--dialect", default=DEFAULT_DIALECT, show_default=True)
def validate(sql_files, ddl_path, config_path, dialect):
    """Check statements with the configured validation engine."""
    from .harness import CatalogValidator

    catalog = _load_catalog(ddl_path, dialect)
    if config_path:
        config = load_config(config_path)
        validator = build_validator_client(config, catalog, base_dir=Path(config_path).parent)
    else:
        validator = CatalogValidator(catalog, dialect=dialect)
    failures = 0
    for raw_path in sorted(sql_files):
        text = Path(raw_path).read_text(encoding="utf-8")
        for i, statement in enumerate(split_statements(text), start=1):
            label = raw_path if i == 1 else f"{raw_path}:{i}"
            error = validator.validate(statement)
            if error is None:
                click.echo(f"{label}: ok")
            else:
                failures += 1
                click.echo(f"{label}: {error}")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
