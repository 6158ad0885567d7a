"""Scenario travel-time matrices, statistics, fold splitting and delays."""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

log = logging.getLogger(__name__)

FREEFLOW_TOL = 1e-9


class ScenarioError(ValueError):
    pass


class ParseError(ScenarioError):
    pass


class DimensionMismatch(ScenarioError):
    pass


class NonPositiveTime(ScenarioError):
    pass


class FreeFlowViolation(ScenarioError):
    pass


class TooFewScenarios(ScenarioError):
    pass


class BadFoldCount(ScenarioError):
    pass


class NonPositiveFreeFlow(ScenarioError):
    pass


class Direction(str, enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class ScenarioMeta:
    day: int = 0
    hour: int = 0
    obstacle_config: int = 0
    direction: Direction = Direction.FORWARD

    def __post_init__(self):
        if not 0 <= self.day <= 6:
            raise ScenarioError(f"day {self.day} outside 0..6")
        if not 0 <= self.hour <= 23:
            raise ScenarioError(f"hour {self.hour} outside 0..23")


class ScenarioMatrix:
    """``N x n`` matrix of positive per-segment travel times (seconds)."""

    def __init__(self, values, meta=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch("scenario values must be a 2-D matrix")
        if not np.all(np.isfinite(values)):
            raise ScenarioError("scenario values must be finite")
        if np.any(values <= 0):
            i, j = np.argwhere(values <= 0)[0]
            raise NonPositiveTime(f"nonpositive travel time at row {i}, segment {j}")
        if meta is None:
            meta = [ScenarioMeta() for _ in range(values.shape[0])]
        meta = list(meta)
        if len(meta) != values.shape[0]:
            raise DimensionMismatch("one meta record per scenario row required")
        values.setflags(write=False)
        self.values = values
        self.meta = tuple(meta)

    @property
    def n_scenarios(self) -> int:
        return self.values.shape[0]

    @property
    def n_segments(self) -> int:
        return self.values.shape[1]

    def rows(self, idx) -> "ScenarioMatrix":
        idx = np.asarray(idx, dtype=int)
        return ScenarioMatrix(self.values[idx], [self.meta[i] for i in idx])

    def columns(self, cols) -> np.ndarray:
        return self.values[:, list(cols)]

    def path_costs(self, incidence) -> np.ndarray:
        return self.values @ np.asarray(incidence, dtype=float)

    def __len__(self):
        return self.n_scenarios


class FreeFlowVector:
    def __init__(self, values):
        values = np.array(values, dtype=float).ravel()
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise NonPositiveTime("free-flow times must be finite and positive")
        values.setflags(write=False)
        self.values = values

    def check_against(self, D: ScenarioMatrix, tol: float = FREEFLOW_TOL) -> None:
        if self.values.size != D.n_segments:
            raise DimensionMismatch("free-flow length differs from segment count")
        viol = self.values[None, :] > D.values + tol
        if np.any(viol):
            i, j = np.argwhere(viol)[0]
            raise FreeFlowViolation(
                f"free-flow time {self.values[j]} exceeds observation {D.values[i, j]} "
                f"(row {i}, segment {j})")


def write_scenarios(path, D: ScenarioMatrix) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "hour", "obstacle_config", "direction"]
                   + [f"t_{j}" for j in range(D.n_segments)])
        for m, row in zip(D.meta, D.values):
            w.writerow([m.day, m.hour, m.obstacle_config, m.direction.value]
                       + [repr(float(v)) for v in row])


def write_freeflow(path, ff: FreeFlowVector) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"t_{j}" for j in range(ff.values.size)])
        w.writerow([repr(float(v)) for v in ff.values])


def _read_rows(path):
    path = FsPath(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def load_freeflow(path) -> FreeFlowVector:
    rows = [r for r in _read_rows(path) if r]
    if not rows:
        raise ParseError(f"{path}: empty free-flow file")
    data = rows[1:] if rows[0] and rows[0][0].startswith("t_") else rows
    if len(data) != 1:
        raise ParseError(f"{path}: expected exactly one free-flow row")
    try:
        return FreeFlowVector([float(v) for v in data[0]])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_scenarios(path, freeflow_path=None) -> tuple[ScenarioMatrix, FreeFlowVector | None]:
    """Read a scenario CSV and optionally its free-flow companion.

    The free-flow invariant (free flow never slower than any observation)
    is enforced when both files are given.
    """
    rows = _read_rows(path)
    if not rows:
        raise ParseError(f"{path}: empty scenario file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if header[:4] != ["day", "hour", "obstacle_config", "direction"]:
        raise ParseError(f"{path}: header must start with day,hour,obstacle_config,direction")
    n = len(header) - 4
    meta, vals = [], []
    for k, r in enumerate(body):
        if len(r) != n + 4:
            raise DimensionMismatch(f"{path}: row {k} has {len(r) - 4} times, expected {n}")
        try:
            meta.append(ScenarioMeta(int(r[0]), int(r[1]), int(r[2]), Direction(r[3])))
            vals.append([float(v) for v in r[4:]])
        except ValueError as exc:
            raise ParseError(f"{path}: row {k}: {exc}") from exc
    D = ScenarioMatrix(np.array(vals).reshape(len(vals), n), meta)
    ff = None
    if freeflow_path is not None:
        ff = load_freeflow(freeflow_path)
        ff.check_against(D)
    return D, ff


def _values(D):
    return D.values if isinstance(D, ScenarioMatrix) else np.asarray(D, dtype=float)


def empirical_moments(D) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and covariance with the ``1/N`` divisor."""
    X = _values(D)
    if X.shape[0] < 2:
        raise TooFewScenarios("at least two scenarios are needed")
    mean = X.mean(axis=0)
    Z = X - mean
    cov = Z.T @ Z / X.shape[0]
    return mean, (cov + cov.T) / 2


def unbiased_covariance(D) -> np.ndarray:
    """Sample covariance with the ``1/(N-1)`` divisor (kernel weighting)."""
    X = _values(D)
    if X.shape[0] < 2:
        raise TooFewScenarios("at least two scenarios are needed")
    Z = X - X.mean(axis=0)
    cov = Z.T @ Z / (X.shape[0] - 1)
    return (cov + cov.T) / 2


def correlation_matrix(D) -> np.ndarray:
    """Pearson correlations; constant columns get zero off-diagonal entries."""
    X = _values(D)
    if X.shape[0] < 2:
        raise TooFewScenarios("at least two scenarios are needed")
    Z = X - X.mean(axis=0)
    sd = np.sqrt((Z ** 2).sum(axis=0))
    flat = sd <= 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0))
    if np.any(flat):
        log.debug("zero-variance columns: %s", np.nonzero(flat)[0].tolist())
    sd_safe = np.where(flat, 1.0, sd)
    Zs = Z / sd_safe
    Zs[:, flat] = 0.0
    R = np.clip(Zs.T @ Zs, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R


@dataclass(frozen=True)
class FoldSplit:
    k: int
    assignments: np.ndarray

    def validation(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments == fold)[0]

    def training(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments != fold)[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def kfold_split(N: int, k: int, seed=0) -> FoldSplit:
    """Shuffled assignment into ``k`` folds whose sizes differ by at most one."""
    if k < 2 or N < k:
        raise BadFoldCount(f"need 2 <= k <= N, got k={k}, N={N}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(N)
    assign = np.empty(N, dtype=int)
    assign[perm] = np.arange(N) % k
    assign.setflags(write=False)
    return FoldSplit(k, assign)


def normalized_delay(T, T_ff):
    """Relative excess ``(T - T_ff) / T_ff`` over a free-flow benchmark."""
    T_ff_arr = np.asarray(T_ff, dtype=float)
    if np.any(T_ff_arr <= 0):
        raise NonPositiveFreeFlow("free-flow time must be positive")
    out = (np.asarray(T, dtype=float) - T_ff_arr) / T_ff_arr
    return float(out) if np.ndim(out) == 0 else out


def synthetic_scenarios(lengths, n_scenarios: int, rng, speed_mps: float = 5 / 3.6,
                        n_factors: int = 2, spread: float = 0.35):
    """Correlated random travel times above free flow (for tests and demos).

    Each time is the free-flow time scaled by ``1 + exp(z)`` noise where
    ``z`` mixes a few shared factors with segment-specific noise.
    """
    lengths = np.asarray(lengths, dtype=float)
    n = lengths.size
    ff = lengths / speed_mps
    load = rng.normal(size=(n_factors, n))
    f = rng.normal(size=(n_scenarios, n_factors))
    z = f @ load / np.sqrt(n_factors) + rng.normal(size=(n_scenarios, n))
    delay = spread * np.exp(0.5 * z) * rng.uniform(0.2, 1.0, size=n)
    return ScenarioMatrix(ff * (1.0 + delay)), FreeFlowVector(ff)
