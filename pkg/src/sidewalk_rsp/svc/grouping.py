"""Dimensional separation: partition segments into low-dimensional subsets."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage, leaves_list
from scipy.spatial.distance import squareform

from ..scenarios import ScenarioMatrix, correlation_matrix
from .models import SvcModel, train_svc

log = logging.getLogger(__name__)


class GroupingMethod(str, enum.Enum):
    RANDOM = "random"
    HIERARCHICAL = "hierarchical"


@dataclass(frozen=True)
class Grouping:
    subsets: tuple
    method: GroupingMethod

    def __post_init__(self):
        flat = sorted(j for s in self.subsets for j in s)
        if flat != list(range(len(flat))):
            raise ValueError("subsets must partition the segment ids")
        if any(len(s) not in (2, 3) for s in self.subsets) and len(flat) > 1:
            raise ValueError("subset sizes must be 2 or 3")

    @property
    def n_segments(self):
        return sum(len(s) for s in self.subsets)

    def __len__(self):
        return len(self.subsets)


def _pair_up(order) -> list[tuple]:
    order = list(order)
    out = [tuple(order[i:i + 2]) for i in range(0, len(order) - len(order) % 2, 2)]
    if len(order) % 2:
        out[-1] = out[-1] + (order[-1],)
    return out


def group_dimensions(D, method="random", seed=0) -> Grouping:
    """Pairs of segments (one triple when the count is odd).

    ``random`` pairs a seeded shuffle.  ``hierarchical`` orders segments
    by an average-linkage tree on ``1 - |corr|`` so that strongly
    correlated segments end up side by side, then pairs within clusters.
    """
    X = D.values if isinstance(D, ScenarioMatrix) else np.asarray(D, dtype=float)
    n = X.shape[1]
    method = GroupingMethod(method)
    if n < 2:
        raise ValueError("need at least two segments")
    if method is GroupingMethod.RANDOM:
        order = np.random.default_rng(seed).permutation(n)
        return Grouping(tuple(_pair_up(order.tolist())), method)

    R = correlation_matrix(X)
    dist = np.clip(1.0 - np.abs(R), 0.0, None)
    np.fill_diagonal(dist, 0.0)
    Z = linkage(squareform((dist + dist.T) / 2, checks=False), method="average")
    labels = fcluster(Z, t=int(np.ceil(n / 2)), criterion="maxclust")
    leaf = leaves_list(Z)
    # clusters in dendrogram order, members in leaf order
    clusters = {}
    for j in leaf:
        clusters.setdefault(labels[j], []).append(int(j))
    subsets = []
    carry = []
    for members in clusters.values():
        members = carry + members
        carry = []
        if len(members) % 2:
            carry = [members.pop()]
        subsets.extend(tuple(members[i:i + 2]) for i in range(0, len(members), 2))
    if carry:
        if subsets:
            subsets[-1] = subsets[-1] + tuple(carry)
        else:
            subsets = [tuple(carry)]
    return Grouping(tuple(subsets), method)


def stage_one(D, nu: float, **kw) -> np.ndarray:
    """Rows kept after a full-dimensional SVC fit (its support vectors)."""
    X = D.values if isinstance(D, ScenarioMatrix) else np.asarray(D, dtype=float)
    model = train_svc(X, nu, **kw)
    return model.sv_index


def tsc_ds(D, nu: float, grouping: Grouping, *, stage1: bool = True,
           rows=None, learner=None, **kw) -> list:
    """Two-stage clustering with dimensional separation.

    Stage one keeps the support vectors of a full-dimensional fit; stage
    two trains one model per subset on those rows.  ``learner`` defaults
    to ``train_svc``; pass ``train_mkl`` for multiple-kernel sets (extra
    keywords then go to the learner only).
    """
    X = D.values if isinstance(D, ScenarioMatrix) else np.asarray(D, dtype=float)
    if rows is None:
        if not stage1:
            rows = np.arange(X.shape[0])
        else:
            rows = stage_one(X, nu, **kw) if learner is None else stage_one(X, nu)
    rows = np.asarray(rows)
    if rows.size < 2:
        log.warning("stage one kept %d rows; using all rows", rows.size)
        rows = np.arange(X.shape[0])
    kept = X[rows]
    learner = learner or train_svc
    return [learner(kept[:, list(s)], nu, columns=tuple(s), **kw) for s in grouping.subsets]
