"""Long-format CSV files for plotting interval bands and coverage bars.

irf-band columns: ``horizon, point, lo, hi`` (percentile-t bounds).
coverage-bars columns: ``regime, lag_rule, method, P, T, h, coverage``.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

from .errors import InvalidInputError
from .metrics import McTable, fmt

IRF_BAND_COLUMNS = ("horizon", "point", "lo", "hi")
COVERAGE_BAR_COLUMNS = ("regime", "lag_rule", "method", "P", "T", "h", "coverage")


def irf_band_rows(records) -> list[dict]:
    """One row per horizon from bootstrap records (or a ``BootstrapResult``)."""
    if hasattr(records, "records"):
        records = records.records()
    return [{"horizon": r["horizon"], "point": r["point"], "lo": r["lo_t"], "hi": r["hi_t"]} for r in records]


def _regime_and_order(dgp: str) -> tuple[str, str]:
    m = re.fullmatch(r"arp\(P=(\d+),band=\[([^,]+),([^\]]+)\]\)", dgp)
    if m:
        return f"band[{m.group(2)},{m.group(3)}]", m.group(1)
    m = re.fullmatch(r"ar1\(phi=([^)]+)\)", dgp)
    if m:
        return f"phi={m.group(1)}", "1"
    return dgp, ""


def coverage_bar_rows(table: McTable) -> list[dict]:
    """One row per (regime, lag rule, method, P, T, h)."""
    rows = []
    for c in table.cells:
        regime, order = _regime_and_order(c.dgp)
        rows.append(dict(regime=regime, lag_rule=c.lag_rule, method=c.method, P=order, T=c.T, h=c.h, coverage=c.coverage))
    return rows


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[k]) if isinstance(r[k], (int, float)) and not isinstance(r[k], bool) else r[k] for k in columns])
    return buf.getvalue()


def read_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def _load_records(path: Path) -> list[dict]:
    data = json.loads(path.read_text(encoding="utf-8"))
    records = data["records"] if isinstance(data, dict) else data
    if not isinstance(records, list) or not records or "horizon" not in records[0]:
        raise InvalidInputError(f"{path} does not hold bootstrap interval records")
    return records


def emit_plot_data(source, kind: str) -> str:
    """CSV text for ``kind`` built from a result file or run directory.

    ``irf-band`` reads the JSON written by ``lpboot infer``; ``coverage-bars``
    reads a ``metrics.csv`` file or a run directory containing one.
    """
    path = Path(source)
    if kind == "irf-band":
        if path.is_dir():
            raise InvalidInputError("irf-band needs an inference JSON file, not a directory")
        return rows_to_csv(irf_band_rows(_load_records(path)), IRF_BAND_COLUMNS)
    if kind == "coverage-bars":
        if path.is_dir():
            path = path / "metrics.csv"
        table = McTable.from_csv(path.read_text(encoding="utf-8"))
        return rows_to_csv(coverage_bar_rows(table), COVERAGE_BAR_COLUMNS)
    raise InvalidInputError(f"unknown plot-data kind {kind!r}")
