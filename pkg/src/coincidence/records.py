"""File formats for pipeline outputs.

JSON-lines files open with one ``{"header": {...}}`` line followed by one
record per line. CSV reports open with ``# key: value`` comment lines. No
timestamps are written, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__


class RecordFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}: line {lineno}: {message}")
        self.lineno = lineno


def config_hash(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def make_header(config: Mapping, **extra) -> dict:
    """Header carried by every output file."""
    head = {
        "tool_version": __version__,
        "config_hash": config_hash(config),
        "seed": config.get("seed"),
        "prior": config.get("prior", "uniform"),
    }
    head.update(extra)
    return head


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(path, header: Mapping, records: Iterable[Mapping]) -> int:
    """Write atomically (temp file then rename). Returns the record count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps({"header": dict(header)}) + "\n")
        for rec in records:
            fh.write(_dumps(rec) + "\n")
            n += 1
    os.replace(tmp, path)
    return n


class JsonlAppender:
    """Append records one at a time, flushing each, for interruption-safe runs."""

    def __init__(self, path, header: Mapping):
        self.path = Path(path)
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", encoding="utf-8", newline="\n")
        if fresh:
            self.write({"header": dict(header)})

    def write(self, rec: Mapping):
        self._fh.write(_dumps(rec) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_jsonl(path) -> tuple[dict, list[dict]]:
    """Return (header, records). A missing header gives ``{}``.

    A truncated final line (an interrupted append) is dropped; any other
    malformed line raises RecordFormatError with its line number.
    """
    header: dict = {}
    records = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    last = max((i for i, line in enumerate(lines) if line.strip()), default=-1)
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            if i == last and i == len(lines) - 1:
                break
            raise RecordFormatError(path, i + 1, f"invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise RecordFormatError(path, i + 1, "record must be a JSON object")
        if set(rec) == {"header"}:
            if i == 0 or not header:
                header = rec["header"]
            continue
        records.append(rec)
    return header, records


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, header: Mapping, fieldnames: Sequence[str], rows: Iterable[Mapping]) -> int:
    buf = io.StringIO()
    for k, v in header.items():
        if isinstance(v, (list, dict)):
            continue
        buf.write(f"# {k}: {v}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    n = 0
    for row in rows:
        writer.writerow({k: _cell(row[k]) for k in fieldnames})
        n += 1
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")
    return n


def read_csv(path) -> tuple[dict, list[dict]]:
    header, body = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                header[key.strip()] = value.strip()
            else:
                body.append(line)
    return header, list(csv.DictReader(body))
