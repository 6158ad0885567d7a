"""Worst-case evaluation of fixed paths and the brute-force reference solver."""

from __future__ import annotations

import numpy as np

from ..network import Network, OdPair, Path, enumerate_paths
from ..optcore import LpProblem, solve_lp
from ..svc import MklModel, SvcModel
from ..usets import BudgetedSet, EllipsoidSet, WassersteinAmbiguity
from .common import Method, RobustSolution, SolverFailure
from .sets import SubsetSupport


def mett(costs, alpha: float) -> float:
    """Empirical mean excess ``min_t t + E[(c - t)^+] / alpha``.

    The minimum sits at a sample value, so sort once and scan.
    """
    c = np.sort(np.asarray(costs, dtype=float))[::-1]
    N = c.size
    excess = np.cumsum(c) - c * np.arange(1, N + 1)       # sum_{i<=k} (c_i - c_k)
    vals = c + excess / (alpha * N)
    return float(vals.min())


def drsp_value(x, amb: WassersteinAmbiguity) -> float:
    """Worst-case mean excess of a binary path over the Wasserstein ball.

    With the infinity dual norm and binary ``x`` the optimal multiplier
    sits at 0 or 1, giving ``min(b^T x, eps/alpha + METT(x))``.
    """
    x = np.asarray(x, dtype=float)
    upper = float(amb.support_hi @ x)
    return min(upper, amb.epsilon / amb.alpha + mett(amb.samples @ x, amb.alpha))


def drsp_value_lp(x, amb: WassersteinAmbiguity) -> float:
    """Same quantity from the fixed-``x`` LP in ``(t, lam, p, s)``."""
    x = np.asarray(x, dtype=float)
    S, b = amb.samples, amb.support_hi
    N, n = S.shape
    # variables: t, lam, p (n), s (N)
    nv = 2 + n + N
    c = np.zeros(nv)
    c[0] = 1.0
    c[1] = amb.epsilon / amb.alpha
    c[2 + n:] = 1.0 / (amb.alpha * N)
    rows, rhs = [], []
    for i in range(N):
        # xi^T x + (b - xi)^T p - t - s_i <= 0
        r = np.zeros(nv)
        r[0] = -1.0
        r[2:2 + n] = b - S[i]
        r[2 + n + i] = -1.0
        rows.append(r)
        rhs.append(-(S[i] @ x))
    for j in range(n):
        # x_j - lam - p_j <= 0
        r = np.zeros(nv)
        r[1] = -1.0
        r[2 + j] = -1.0
        rows.append(r)
        rhs.append(-x[j])
    lo = np.concatenate([[-np.inf], np.zeros(1 + n + N)])
    lp = LpProblem(c, np.array(rows), ["<="] * len(rows), np.array(rhs), lo, np.full(nv, np.inf))
    r = solve_lp(lp)
    if not r.ok:
        raise SolverFailure(f"fixed-path DRSP LP failed: {r.status.value}", r)
    return float(r.objective)


def is_svc_collection(model) -> bool:
    if isinstance(model, (SvcModel, MklModel, SubsetSupport)):
        return True
    return isinstance(model, (list, tuple)) and bool(model) and all(
        isinstance(m, (SvcModel, MklModel)) for m in model)


def worst_case_eval(path, model, n: int | None = None, exact_lp: bool = False) -> float:
    """Worst-case cost of a fixed path under an uncertainty model.

    ``path`` is a ``Path`` or an incidence vector.  Plain cost vectors are
    treated as singleton sets.  SVC sets always use the inner LP; with
    ``exact_lp`` the Wasserstein value also comes from an LP instead of
    the closed form.
    """
    x = path.incidence.astype(float) if isinstance(path, Path) else np.asarray(path, dtype=float)
    if isinstance(model, BudgetedSet):
        return model.worst_case(x)
    if isinstance(model, EllipsoidSet):
        return model.worst_case(x)
    if isinstance(model, WassersteinAmbiguity):
        return drsp_value_lp(x, model) if exact_lp else drsp_value(x, model)
    if is_svc_collection(model):
        sup = model if isinstance(model, SubsetSupport) else SubsetSupport(model, n=x.size)
        return sup.value(x, exact_lp=True)
    costs = np.asarray(model, dtype=float)
    if costs.shape == x.shape:
        return float(costs @ x)
    raise TypeError(f"unsupported uncertainty model {type(model).__name__}")


def method_of(model) -> Method:
    if isinstance(model, BudgetedSet):
        return Method.BUDGETED
    if isinstance(model, EllipsoidSet):
        return Method.ELLIPSOIDAL
    if isinstance(model, WassersteinAmbiguity):
        return Method.DRSP
    if is_svc_collection(model):
        if isinstance(model, SubsetSupport):
            model = model.models
        first = model[0] if isinstance(model, (list, tuple)) else model
        return Method.MKL if isinstance(first, MklModel) else Method.SVC
    return Method.NOMINAL


def brute_force_robust(network: Network, model, od: OdPair, max_segments: int | None = None,
                       cap: int = 1_000_000, exact_lp: bool = True) -> RobustSolution:
    """Minimum of ``worst_case_eval`` over every simple path (reference oracle).

    Ties go to the first path in enumeration order.
    """
    max_segments = network.n if max_segments is None else max_segments
    paths = enumerate_paths(network, od, max_segments, cap=cap)
    if not paths:
        raise SolverFailure("no path within the segment limit")
    if is_svc_collection(model) and not isinstance(model, SubsetSupport):
        model = SubsetSupport(model, n=network.n)
    vals = np.array([worst_case_eval(p, model, n=network.n, exact_lp=exact_lp) for p in paths])
    k = int(np.argmin(vals))
    return RobustSolution(paths[k], float(vals[k]), method_of(model), np.nan,
                          {"paths": len(paths)})
