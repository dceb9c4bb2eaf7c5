"""Trace and result files.

Trace files are line oriented::

    k=<int> setup=<discard|phase|none> label=<free text to end of line>
    <page-id> <bit>
    ...

Page ids are non-negative decimal integers and bits are 0 or 1.  Results are
written as CSV (one row per policy and trial, columns in ``CSV_COLUMNS``) or
as JSON (the full nested report).
"""

from __future__ import annotations

import csv
import io
import json
import os
import re

import numpy as np

from .model import Setup, Trace, TraceError

_HEADER_RE = re.compile(r"^k=(\S+) setup=(\S+) label=(.*)$")

CSV_COLUMNS = (
    "trace", "policy", "trial", "seed", "faults", "evictions",
    "opt", "eta0", "eta1", "bound", "slack",
)


class TraceFormatError(TraceError):
    def __init__(self, path, line: int, column: int, message: str):
        self.path, self.line, self.column = path, line, column
        super().__init__(f"{path}:{line}:{column}: {message}")


def write_trace(trace: Trace, path) -> None:
    trace.check()
    if "\n" in trace.label or "\r" in trace.label:
        raise TraceError("trace label must fit on one line")
    buf = io.StringIO()
    buf.write(f"k={trace.k} setup={trace.setup.value} label={trace.label}\n")
    body = np.column_stack([trace.requests, trace.predictions.astype(np.int64)])
    np.savetxt(buf, body, fmt="%d %d")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


def read_trace(path) -> Trace:
    if not os.path.exists(path):
        raise FileNotFoundError(f"trace file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        m = _HEADER_RE.match(header)
        if not m:
            raise TraceFormatError(path, 1, 1, "expected header 'k=<int> setup=<discard|phase|none> label=<text>'")
        try:
            k = int(m.group(1))
        except ValueError:
            raise TraceFormatError(path, 1, 3, f"cache size {m.group(1)!r} is not an integer") from None
        if k < 1:
            raise TraceFormatError(path, 1, 3, "cache size must be positive")
        try:
            setup = Setup.parse(m.group(2))
        except TraceError:
            raise TraceFormatError(path, 1, header.index("setup=") + 7, f"unknown setup {m.group(2)!r}") from None
        requests, bits = [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                col = len(line.rstrip("\n")) + 1 if len(parts) < 2 else line.index(parts[2]) + 1
                what = "missing prediction bit" if len(parts) < 2 else "unexpected extra field"
                raise TraceFormatError(path, lineno, col, what)
            page, bit = parts
            if not page.isdigit():
                raise TraceFormatError(path, lineno, line.index(page) + 1, f"bad page id {page!r}")
            if bit not in ("0", "1"):
                raise TraceFormatError(path, lineno, line.index(bit, len(page)) + 1, f"bad bit {bit!r}")
            requests.append(int(page))
            bits.append(int(bit))
    return Trace(k, np.asarray(requests, dtype=np.int64), np.asarray(bits, dtype=np.uint8), setup, m.group(3))


def write_results(results, path, fmt: str = "csv") -> None:
    """Write an :class:`~onebit_paging.harness.ExperimentResult`."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_results(results, fmt))


def format_results(results, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps(results.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown results format {fmt!r}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in results.rows():
        writer.writerow(row)
    return buf.getvalue()
