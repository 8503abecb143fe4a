"""CSV emission for run traces and per-run summaries."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from sasa.harness.runner import TRACE_COLUMNS, RunTrace, TraceRow

SUMMARY_COLUMNS = ("seed", "drop_iters", "final_loss")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


class TraceWriter:
    """Writes rows as they are produced, so a failed run leaves a usable file.

    Usable directly as the ``on_row`` callback of the runners.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._csv = csv.writer(self._fh)
        self._csv.writerow(TRACE_COLUMNS)

    def __call__(self, row: TraceRow) -> None:
        self._csv.writerow([_fmt(v) for v in row])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trace(trace: RunTrace, path) -> None:
    with TraceWriter(path) as w:
        for row in trace.rows:
            w(row)


def read_trace(path) -> list[TraceRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        rows = []
        for rec in reader:
            k, loss, alpha, n, zbar, vbar, sig, lci, uci, dropped = rec
            rows.append(TraceRow(int(k), float(loss), float(alpha), int(n), float(zbar), float(vbar),
                                 float(sig), float(lci), float(uci), dropped == "1"))
    return rows


def write_summary(traces, path) -> None:
    """One line per run; drop iterations are joined with ';'."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for t in traces:
            w.writerow([t.seed, ";".join(str(k) for k in t.drop_iters), _fmt(float(t.final_loss))])
