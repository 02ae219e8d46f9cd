"""Monte Carlo summaries: coverage, relative interval length and bias."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import IncompleteGridError, InvalidInputError

CSV_COLUMNS = (
    "design",
    "dgp",
    "T",
    "lag_rule",
    "method",
    "scheme",
    "h",
    "coverage",
    "median_rel_length",
    "mean_abs_bias",
    "n_reps",
    "n_degenerate",
)


def coverage(lo, hi, truth) -> float:
    """Share of replications with lo <= truth <= hi.

    Examples
    --------
    >>> coverage([-1, -1], [1, 1], 0.0)
    1.0
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    if lo.size == 0:
        raise InvalidInputError("coverage needs at least one replication")
    truth = np.broadcast_to(np.asarray(truth, dtype=float), lo.shape)
    return float(np.mean((lo <= truth) & (truth <= hi)))


def irf_range(irf_estimates) -> np.ndarray:
    """max - min of each replication's estimated response over its horizons."""
    R = np.atleast_2d(np.asarray(irf_estimates, dtype=float))
    return R.max(axis=1) - R.min(axis=1)


def median_rel_length(lo, hi, irf_estimates=None, ranges=None) -> tuple[float, int]:
    """Median of interval width divided by the replication's own IRF range.

    Either pass the per-replication estimated responses over horizons 0..H
    (``irf_estimates``, shape (reps, H + 1)) or precomputed ``ranges``.
    Replications with a zero range are dropped and counted.

    Returns
    -------
    (median, n_degenerate)
        The median is NaN when every replication is degenerate.
    """
    width = np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float)
    rng = irf_range(irf_estimates) if ranges is None else np.asarray(ranges, dtype=float)
    good = rng > 0
    n_deg = int((~good).sum())
    if not good.any():
        return float("nan"), n_deg
    return float(np.median(width[good] / rng[good])), n_deg


def envelope_rel_length(lo, hi, point_estimates, level: float = 0.90) -> float:
    """Median interval width relative to the Monte Carlo spread of the point estimates.

    The spread is the distance between the (1-level)/2 and (1+level)/2
    empirical quantiles of the point estimates across replications. Returns
    NaN when the spread is zero.
    """
    width = np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float)
    q = np.quantile(np.asarray(point_estimates, dtype=float), [(1 - level) / 2, (1 + level) / 2])
    spread = q[1] - q[0]
    return float(np.median(width) / spread) if spread > 0 else float("nan")


def mean_abs_bias(bootstrap_means, truth) -> float:
    """Mean over replications of |truth - bootstrap mean|.

    Examples
    --------
    >>> round(mean_abs_bias([0.9, 1.1], 1.0), 12)
    0.1
    """
    m = np.asarray(bootstrap_means, dtype=float)
    if m.size == 0:
        raise InvalidInputError("bias needs at least one replication")
    return float(np.mean(np.abs(np.asarray(truth, dtype=float) - m)))


@dataclass(frozen=True)
class McCell:
    """One row of a Monte Carlo table."""

    design: str
    dgp: str
    T: int
    lag_rule: str
    method: str
    scheme: str
    h: int
    coverage: float
    median_rel_length: float
    mean_abs_bias: float
    n_reps: int
    n_degenerate: int = 0

    @property
    def key(self) -> tuple:
        return (self.design, self.dgp, self.T, self.lag_rule, self.method, self.scheme, self.h)


def fmt(x) -> str:
    """Six significant digits, locale independent; 'nan' for missing values."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    out = format(x, ".6g")
    return "0" if out == "-0" else out


@dataclass(frozen=True)
class McTable:
    """A complete grid of :class:`McCell` rows in a fixed order."""

    cells: tuple

    def rows(self) -> list[dict]:
        return [asdict(c) for c in self.cells]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            w.writerow([fmt(getattr(c, k)) if k in _NUMERIC else getattr(c, k) for k in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{k: _json_value(getattr(c, k)) for k in CSV_COLUMNS} for c in self.cells]
        return json.dumps(rows, indent=1) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "McTable":
        reader = csv.DictReader(io.StringIO(text))
        cells = []
        for row in reader:
            kw = {}
            for k in CSV_COLUMNS:
                v = row[k]
                if k in ("T", "h", "n_reps", "n_degenerate"):
                    kw[k] = int(v)
                elif k in _NUMERIC:
                    kw[k] = float(v)
                else:
                    kw[k] = v
            cells.append(McCell(**kw))
        return cls(tuple(cells))


_NUMERIC = {"T", "h", "coverage", "median_rel_length", "mean_abs_bias", "n_reps", "n_degenerate"}


def _json_value(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(fmt(v)) if not math.isnan(v) else None


def assemble_table(cells, horizons=None) -> McTable:
    """Order cells into a table and check the grid is complete.

    The grid is the product of the observed designs, DGPs, sample sizes,
    lag rules, methods and schemes with ``horizons`` (default: observed
    horizons). Duplicate or missing combinations raise
    :class:`IncompleteGridError`.
    """
    cells = list(cells)
    if not cells:
        raise IncompleteGridError("no cells supplied")
    axes = [[] for _ in range(6)]
    for c in cells:
        for i, v in enumerate(c.key[:6]):
            if v not in axes[i]:
                axes[i].append(v)
    hs = sorted({c.h for c in cells}) if horizons is None else list(horizons)
    by_key = {}
    for c in cells:
        if c.key in by_key:
            raise IncompleteGridError(f"duplicate cell {c.key}")
        by_key[c.key] = c
    ordered, missing = [], []
    for combo in itertools.product(*axes, hs):
        if combo in by_key:
            ordered.append(by_key[combo])
        else:
            missing.append(combo)
    if missing:
        raise IncompleteGridError(f"{len(missing)} missing cells, e.g. {missing[0]}")
    if len(ordered) != len(cells):
        extra = set(by_key) - {c.key for c in ordered}
        raise IncompleteGridError(f"cells outside the grid, e.g. {sorted(extra)[0]}")
    return McTable(tuple(ordered))
