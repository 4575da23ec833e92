"""Point-by-point deviation between an analytic and a simulated CSV."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .config import SWEEP_PARAMETERS, ConfigError

DEFAULT_TOLERANCE = 0.015
KEY_CANDIDATES = SWEEP_PARAMETERS + ("gamma", "x", "point")
VALUE_CANDIDATES = ("mean_fraction", "fraction", "s", "analytic_fraction")


class GridMismatch(ConfigError):
    def __init__(self, missing: list[float], extra: list[float]):
        self.missing = missing
        self.extra = extra
        parts = []
        if missing:
            parts.append(f"only in analytic: {missing}")
        if extra:
            parts.append(f"only in simulated: {extra}")
        super().__init__("sweep grids differ; " + "; ".join(parts))


@dataclass(frozen=True)
class PointDeviation:
    key: float
    analytic: float
    simulated: float
    tolerance: float

    @property
    def deviation(self) -> float:
        # undefined on both sides (e.g. no giant component) counts as agreement
        if math.isnan(self.analytic) and math.isnan(self.simulated):
            return 0.0
        return abs(self.analytic - self.simulated)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


@dataclass(frozen=True)
class DeviationReport:
    key: str
    points: list[PointDeviation]

    @property
    def max_deviation(self) -> float:
        devs = [p.deviation for p in self.points]
        if any(math.isnan(d) for d in devs):
            return math.nan
        return max(devs, default=0.0)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    def table(self) -> tuple[list[str], list[list]]:
        rows = [[p.key, p.analytic, p.simulated, p.deviation, p.tolerance, p.passed] for p in self.points]
        return [self.key, "analytic", "simulated", "deviation", "tolerance", "pass"], rows


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def _pick(header: list[str], wanted: str | None, candidates, what: str, path) -> str:
    if wanted is not None:
        if wanted not in header:
            raise ConfigError(f"column {wanted!r} not in {path}", what)
        return wanted
    for c in candidates:
        if c in header:
            return c
    raise ConfigError(f"no {what} column found in {path}; pass one explicitly", what)


def _num(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        return math.nan


def compare(
    analytic_csv: str | Path,
    simulated_csv: str | Path,
    key: str | None = None,
    analytic_column: str | None = None,
    simulated_column: str | None = None,
    tolerance: float | None = None,
    rel_key_tol: float = 1e-9,
) -> DeviationReport:
    """Absolute deviation per sweep point.

    The tolerance comes from a ``tolerance`` column of the analytic file
    when present, else from ``tolerance`` (default 0.015).
    """
    ha, ra = read_csv(analytic_csv)
    hs, rs = read_csv(simulated_csv)
    k = _pick([h for h in ha if h in hs], key, KEY_CANDIDATES, "key", simulated_csv)
    ca = _pick(ha, analytic_column, VALUE_CANDIDATES, "analytic value", analytic_csv)
    cs = _pick(hs, simulated_column, (ca,) + VALUE_CANDIDATES, "simulated value", simulated_csv)
    tol_default = DEFAULT_TOLERANCE if tolerance is None else tolerance

    a_pts = [(_num(r[k]), r) for r in ra]
    s_pts = [(_num(r[k]), r) for r in rs]
    close = lambda x, y: abs(x - y) <= rel_key_tol * max(1.0, abs(x), abs(y))
    missing = [x for x, _ in a_pts if not any(close(x, y) for y, _ in s_pts)]
    extra = [y for y, _ in s_pts if not any(close(x, y) for x, _ in a_pts)]
    if missing or extra:
        raise GridMismatch(missing, extra)
    points = []
    for x, row in a_pts:
        srow = next(r for y, r in s_pts if close(x, y))
        tol = _num(row["tolerance"]) if "tolerance" in row and row["tolerance"] != "" else tol_default
        points.append(PointDeviation(x, _num(row[ca]), _num(srow[cs]), tol))
    return DeviationReport(k, points)
