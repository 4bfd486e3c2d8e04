"""Report serialization: CSV tables, a JSON summary, optional PPM image.

Byte stability is the contract here: identical bundles serialize to
identical bytes (sorted JSON keys, repr-based float cells, CRLF CSV rows),
and writes are atomic (temp file in the target directory, then rename).
"""

from __future__ import annotations

import base64
import csv
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass

from .errors import IfsLabError, InvalidParameterError

_NAME_RE = re.compile(r"^[a-z0-9][a-z0-9_-]*$")


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class CsvTable:
    name: str
    header: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise InvalidParameterError(f"bad table name {self.name!r}")
        if not self.header:
            raise InvalidParameterError("table needs a header")
        for row in self.rows:
            if len(row) != len(self.header):
                raise InvalidParameterError(
                    f"row width {len(row)} does not match header width {len(self.header)}"
                )


def table_to_bytes(table: CsvTable) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def summary_to_bytes(summary: dict) -> bytes:
    return (json.dumps(summary, sort_keys=True, indent=2) + "\n").encode("utf-8")


@dataclass(frozen=True)
class ReportBundle:
    summary: dict
    tables: tuple[CsvTable, ...] = ()
    image: bytes | None = None

    def __post_init__(self):
        names = [t.name for t in self.tables]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"duplicate table names: {names}")


def bundle_files(bundle: ReportBundle) -> list[tuple[str, str, str]]:
    """(name, encoding, content) triples; text for CSV/JSON, base64 for PPM."""
    files = []
    for table in bundle.tables:
        files.append((f"{table.name}.csv", "text", table_to_bytes(table).decode("utf-8")))
    files.append(("summary.json", "text", summary_to_bytes(bundle.summary).decode("utf-8")))
    if bundle.image is not None:
        files.append(("image.ppm", "base64", base64.b64encode(bundle.image).decode("ascii")))
    return files


def atomic_write_bytes(path: str, data: bytes):
    directory = os.path.dirname(path) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise IfsLabError(f"cannot write {path}: {exc}") from exc


def write_report(bundle: ReportBundle, out_dir: str) -> list[str]:
    """Write every bundle file into out_dir; returns the written paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IfsLabError(f"cannot create {out_dir}: {exc}") from exc
    paths = []
    for name, encoding, content in bundle_files(bundle):
        data = base64.b64decode(content) if encoding == "base64" else content.encode("utf-8")
        path = os.path.join(out_dir, name)
        atomic_write_bytes(path, data)
        paths.append(path)
    return paths
