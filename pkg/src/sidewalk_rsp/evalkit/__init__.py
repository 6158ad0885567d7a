"""Evaluation protocol: OD selection, k-fold KPIs, sensitivity sweeps and reports."""

from .manifest import file_digest, read_manifest, write_manifest
from .protocol import (EvalOptions, InsufficientCandidates, canonical_method, evaluate,
                       select_od_pairs)
from .report import (KPI_COLUMNS, IoError, KpiReport, KpiRow, OdRow, PathRow, delay_stats,
                     emit_report, load_report, tail_mean)
from .sweep import (FACTOR_TABLE, ImprovementRow, SweepBase, SweepConfig, SweepError,
                    SweepFactor, sensitivity_sweep, write_improvements)

__all__ = [
    "file_digest", "read_manifest", "write_manifest", "EvalOptions", "InsufficientCandidates",
    "canonical_method", "evaluate", "select_od_pairs", "KPI_COLUMNS", "IoError", "KpiReport",
    "KpiRow", "OdRow", "PathRow", "delay_stats", "emit_report", "load_report", "tail_mean",
    "FACTOR_TABLE", "ImprovementRow", "SweepBase", "SweepConfig", "SweepError", "SweepFactor",
    "sensitivity_sweep", "write_improvements",
]
