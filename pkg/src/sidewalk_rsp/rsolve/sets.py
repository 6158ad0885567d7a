"""Support functions for collections of per-subset SVC sets."""

from __future__ import annotations

import numpy as np

from ..svc import L1Set, MklModel, SvcModel


class SubsetSupport:
    """Sum of per-subset worst cases ``sum_f max_{u_f in U_f} u_f^T x_f``.

    Polytopes of dimension two or three are handled by enumerating their
    vertices once; larger ones fall back to the support LP.
    """

    def __init__(self, models, n: int | None = None, use_vertices: bool = True):
        models = [models] if isinstance(models, (SvcModel, MklModel)) else list(models)
        if not models:
            raise ValueError("no models given")
        self.models = models
        self.columns = []
        for m in models:
            cols = tuple(m.columns) if m.columns else tuple(range(m.data.shape[1]))
            self.columns.append(np.array(cols, dtype=int))
        covered = np.concatenate(self.columns)
        self.n = int(covered.max()) + 1 if n is None else n
        if np.unique(covered).size != covered.size:
            raise ValueError("subsets overlap")
        self.sets: list[L1Set] = [m.polyhedron() for m in models]
        self.vertices = []
        for s in self.sets:
            if use_vertices and s.dim in (2, 3) and s.bounded:
                self.vertices.append(s.vertices())
            else:
                self.vertices.append(None)

    def __len__(self):
        return len(self.sets)

    def subset_value(self, f: int, xf) -> tuple[float, np.ndarray]:
        xf = np.asarray(xf, dtype=float)
        V = self.vertices[f]
        if V is not None:
            vals = V @ xf
            k = int(np.argmax(vals))
            return float(vals[k]), V[k]
        return self.sets[f].support(xf)

    def value(self, x, exact_lp: bool = False) -> float:
        x = np.asarray(x, dtype=float)
        total = 0.0
        for f, cols in enumerate(self.columns):
            xf = x[cols]
            if not np.any(xf):
                continue
            v = self.sets[f].support(xf)[0] if exact_lp else self.subset_value(f, xf)[0]
            total += v
        return total

    def anchor(self, f: int) -> np.ndarray:
        """A point known to lie in subset ``f``'s set."""
        V = self.vertices[f]
        if V is not None:
            return V.mean(axis=0)
        m = self.models[f]
        if isinstance(m, SvcModel):
            scores = m.score(m.data)
        else:
            scores = m.decision_distance(m.data)
        return m.data[int(np.argmin(scores))]
