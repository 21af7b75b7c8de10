"""Edge-list reading, report writing, and atomic file output."""

from __future__ import annotations

import csv
import gzip
import io
import json
import os
import tempfile
from datetime import datetime
from importlib import resources
from pathlib import Path

from .errors import InputError
from .graph import EdgeEvent

REQUIRED_COLUMNS = ("timestamp", "src", "dst")


def _open_text(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rt", newline="", encoding="utf-8")
    return open(path, "r", newline="", encoding="utf-8")


def _guess_delimiter(path, fmt: str) -> str:
    if fmt == "csv":
        return ","
    if fmt == "tsv":
        return "\t"
    if fmt != "auto":
        raise InputError(f"unknown format {fmt!r}; use csv, tsv or auto")
    name = str(path).lower()
    if name.endswith(".gz"):
        name = name[:-3]
    return "\t" if name.endswith((".tsv", ".tab")) else ","


def parse_timestamp(text: str):
    """Integer, float, or ISO-8601 instant (a trailing ``Z`` means UTC)."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        return datetime.fromisoformat(iso)
    except ValueError:
        raise InputError(f"unparseable timestamp {text!r}") from None


def read_edge_list(path, fmt: str = "auto") -> list:
    """Read ``timestamp,src,dst[,weight]`` rows (header required) into EdgeEvents.

    Gzip input is detected from the file's magic bytes. Errors name the
    offending line.
    """
    delimiter = _guess_delimiter(path, fmt)
    events = []
    with _open_text(path) as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: no events (file is empty)") from None
        except (csv.Error, UnicodeDecodeError) as exc:
            raise InputError(f"{path}:1: {exc}") from None
        header = [h.strip().lower() for h in header]
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise InputError(f"{path}:1: header lacks column(s) {missing}; got {header}")
        extra = set(header) - {*REQUIRED_COLUMNS, "weight"}
        if extra:
            raise InputError(f"{path}:1: unexpected column(s) {sorted(extra)}")
        pos = {name: i for i, name in enumerate(header)}
        width = len(header)
        try:
            for row in reader:
                line = reader.line_num
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != width:
                    raise InputError(f"{path}:{line}: expected {width} columns, got {len(row)}")
                try:
                    weight = float(row[pos["weight"]]) if "weight" in pos else 1.0
                    events.append(
                        EdgeEvent(
                            timestamp=parse_timestamp(row[pos["timestamp"]]),
                            src=row[pos["src"]].strip(),
                            dst=row[pos["dst"]].strip(),
                            weight=weight,
                        )
                    )
                except (InputError, ValueError) as exc:
                    raise InputError(f"{path}:{line}: {exc}") from None
        except (csv.Error, UnicodeDecodeError) as exc:
            raise InputError(f"{path}:{reader.line_num}: {exc}") from None
    if not events:
        raise InputError(f"{path}: no events")
    kinds = {isinstance(ev.timestamp, datetime) for ev in events}
    if len(kinds) > 1:
        raise InputError(f"{path}: mixes numeric and ISO-8601 timestamps")
    return events


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def report_schema() -> dict:
    """JSON Schema shipped with the package for report documents."""
    text = resources.files("frechet_cpd").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def report_curves_csv(report_doc: dict) -> str:
    """One row per scanned split per tested segment."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment_lo", "segment_hi", "k", "u", "nT", "threshold"])
    for curve in report_doc.get("curves", []):
        lo, hi = curve["segment"]
        for k, value in zip(curve["k"], curve["nT"]):
            writer.writerow([lo, hi, k, repr((k - lo) / (hi - lo)), repr(value), repr(curve["threshold"])])
    return buf.getvalue()


def curve_csv(curve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "u", "nT"])
    for k, u, value in zip(curve.k, curve.u, curve.values):
        writer.writerow([int(k), repr(float(u)), repr(float(value))])
    return buf.getvalue()


def network_edges_csv(network) -> str:
    """Edge-stream CSV of a network: one row per undirected edge per snapshot."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestamp", "src", "dst", "weight"])
    labels = network.node_labels
    for snap in network.snapshots:
        a = snap.dense()
        rows, cols = (a > 0).nonzero()
        for i, j in zip(rows, cols):
            if i <= j:
                writer.writerow([snap.index, labels[i], labels[j], repr(float(a[i, j]))])
    return buf.getvalue()
