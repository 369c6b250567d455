"""Small I/O helpers shared by the CLI: atomic writes, manifests, CSV."""
from __future__ import annotations

import csv
import io
import os
import re
import tempfile
from pathlib import Path


def write_text_atomic(path: str | Path, content: str) -> None:
    """Write via a temp file in the same directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def render_csv(header: list[str], rows: list[list]) -> str:
    """Fixed CSV dialect: comma, header row, UTF-8, LF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def read_manifest(path: str | Path, columns: list[str]) -> list[dict[str, str]]:
    """Read a header-full CSV manifest, checking the required columns."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(columns) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"manifest {path} is missing columns: {sorted(missing)}")
        return [dict(row) for row in reader]


def metric_filename(metric: str) -> str:
    """Filesystem-safe name for a metric CSV ('columns(all-positions)' ->
    'columns_all_positions')."""
    return re.sub(r"_+", "_", re.sub(r"[^a-z0-9]+", "_", metric.lower())).strip("_")
