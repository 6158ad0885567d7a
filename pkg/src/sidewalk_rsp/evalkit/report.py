"""KPI containers, per-OD statistics and CSV emission."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path as FsPath

import numpy as np


class IoError(OSError):
    pass


def tail_mean(delays, share: float = 0.05) -> float:
    """Mean of the worst ``ceil(share * V)`` values."""
    d = np.sort(np.asarray(delays, dtype=float))[::-1]
    k = max(1, math.ceil(share * d.size - 1e-12))
    return float(d[:k].mean())


def delay_stats(delays, worst5: str = "mean") -> tuple[float, float, float]:
    """``(average, worst, worst-5%)`` of one OD's validation delays.

    ``worst5="quantile"`` swaps the tail mean for the 95th-percentile point.
    """
    d = np.asarray(delays, dtype=float)
    if worst5 == "mean":
        w5 = tail_mean(d)
    elif worst5 == "quantile":
        w5 = float(np.quantile(d, 0.95))
    else:
        raise ValueError(f"unknown worst-5% mode {worst5!r}")
    return float(d.mean()), float(d.max()), w5


@dataclass(frozen=True)
class KpiRow:
    method: str
    parameter: float
    avg_delay: float
    worst_delay: float
    worst5_delay: float
    n_ods: int
    n_failed: int


@dataclass(frozen=True)
class OdRow:
    method: str
    parameter: float
    origin: int
    destination: int
    avg_delay: float
    worst_delay: float
    worst5_delay: float


@dataclass(frozen=True)
class PathRow:
    method: str
    parameter: float
    fold: int
    origin: int
    destination: int
    segments: tuple


KPI_COLUMNS = ("avg_delay", "worst_delay", "worst5_delay")


@dataclass
class KpiReport:
    kpis: list = field(default_factory=list)
    per_od: list = field(default_factory=list)
    paths: list = field(default_factory=list)

    def kpi(self, method: str, parameter: float) -> KpiRow:
        for r in self.kpis:
            if r.method == method and r.parameter == parameter:
                return r
        raise KeyError((method, parameter))

    def methods(self) -> list[str]:
        return sorted({r.method for r in self.kpis})

    def best(self, method: str, kpi: str = "worst_delay") -> KpiRow:
        """Row of ``method`` with the lowest finite ``kpi`` (first parameter on ties)."""
        rows = [r for r in self.kpis if r.method == method and np.isfinite(getattr(r, kpi))]
        if not rows:
            raise KeyError(method)
        return min(rows, key=lambda r: (getattr(r, kpi), r.parameter))

    def sorted(self) -> "KpiReport":
        """Copy in the canonical (emission) order."""
        return KpiReport(
            sorted(self.kpis, key=lambda r: (r.method, r.parameter)),
            sorted(self.per_od, key=lambda r: (r.method, r.parameter, r.origin, r.destination)),
            sorted(self.paths,
                   key=lambda r: (r.method, r.parameter, r.fold, r.origin, r.destination)))

    def tradeoff(self) -> list[tuple]:
        return [(r.method, r.parameter, r.avg_delay, r.worst_delay) for r in self.kpis]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return " ".join(str(x) for x in v)
    return str(v)


def _write(path: FsPath, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def emit_report(report: KpiReport, out_dir) -> list[FsPath]:
    """Write ``kpi.csv``, ``per_od.csv``, ``tradeoff.csv`` and ``paths.csv``."""
    out = FsPath(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    canon = report.sorted()
    kpis, per_od, paths = canon.kpis, canon.per_od, canon.paths
    files = [out / "kpi.csv", out / "per_od.csv", out / "tradeoff.csv", out / "paths.csv"]
    _write(files[0], [f.name for f in fields(KpiRow)], [astuple(r) for r in kpis])
    _write(files[1], [f.name for f in fields(OdRow)], [astuple(r) for r in per_od])
    _write(files[2], ["method", "parameter", "avg_delay", "worst_delay"],
           [(r.method, r.parameter, r.avg_delay, r.worst_delay) for r in kpis])
    _write(files[3], ["method", "parameter", "fold", "origin", "destination", "segments"],
           [(r.method, r.parameter, r.fold, r.origin, r.destination, r.segments)
            for r in paths])
    return files


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def load_report(out_dir) -> KpiReport:
    """Parse files written by ``emit_report`` back into a report."""
    out = FsPath(out_dir)
    _, kr = _read(out / "kpi.csv")
    kpis = [KpiRow(r[0], float(r[1]), float(r[2]), float(r[3]), float(r[4]), int(r[5]),
                   int(r[6])) for r in kr]
    _, orows = _read(out / "per_od.csv")
    per_od = [OdRow(r[0], float(r[1]), int(r[2]), int(r[3]), float(r[4]), float(r[5]),
                    float(r[6])) for r in orows]
    paths = []
    if (out / "paths.csv").exists():
        _, pr = _read(out / "paths.csv")
        paths = [PathRow(r[0], float(r[1]), int(r[2]), int(r[3]), int(r[4]),
                         tuple(int(s) for s in r[5].split())) for r in pr]
    return KpiReport(kpis, per_od, paths)
