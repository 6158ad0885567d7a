"""CSV rows for solved paths."""

from __future__ import annotations

import csv

from .common import RobustSolution

SOLUTION_HEADER = ["method", "param", "od_origin", "od_dest", "fold", "objective",
                   "path_segment_ids"]


def solution_row(sol: RobustSolution, od, fold: int) -> list:
    return [sol.method.value, repr(float(sol.parameter)), od.origin, od.destination, fold,
            repr(float(sol.objective)), " ".join(str(j) for j in sol.path.segments)]


def write_solutions(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SOLUTION_HEADER)
        w.writerows(rows)
