"""Fully dualised robust counterparts, assembled as single MILPs.

These are the textbook programs with every Lagrange multiplier as an
explicit variable.  They grow quickly with the number of support vectors
and samples, so the default solvers use cutting planes instead; the
programs here serve as cross-checks on small instances.
"""

from __future__ import annotations

import numpy as np

from ..network import Network, OdPair
from ..optcore import EQ, LE, LpProblem, MipProblem, solve_lp, solve_mip
from ..svc import L1Set
from ..usets import WassersteinAmbiguity
from .common import GAP_TOL, Method, Timer, cycle_cuts, finish, flow_master
from .evaluate import drsp_value
from .sets import SubsetSupport


def inner_dual_lp(s: L1Set, x) -> LpProblem:
    """Dual of the support LP: ``min sum (mu - lam) h + eta theta``.

    Variables ``[eta, lam (K), mu (K)]`` subject to
    ``sum_k (lam_k - mu_k) G_k + x = 0`` and ``lam + mu = eta w``.
    """
    x = np.asarray(x, dtype=float)
    K, d = s.G.shape
    c = np.concatenate([[s.theta], -s.h, s.h])
    A1 = np.hstack([np.zeros((d, 1)), s.G.T, -s.G.T])
    A2 = np.hstack([-s.w[:, None], np.eye(K), np.eye(K)])
    A = np.vstack([A1, A2])
    b = np.concatenate([-x, np.zeros(K)])
    return LpProblem(c, A, [EQ] * (d + K), b, np.zeros(1 + 2 * K), np.full(1 + 2 * K, np.inf))


def inner_dual_value(s: L1Set, x) -> float:
    r = solve_lp(inner_dual_lp(s, x))
    if not r.ok:
        raise RuntimeError(f"dual LP failed: {r.status.value}")
    return float(r.objective)


def subset_program(network: Network, models, od: OdPair) -> MipProblem:
    """Single MILP over ``[x, b, (eta_f, lam_f, mu_f) for each subset]``."""
    n = network.n
    sup = models if isinstance(models, SubsetSupport) else SubsetSupport(models, n=n, use_vertices=False)
    sizes = [2 * s.h.size + 1 for s in sup.sets]
    n_extra = 1 + sum(sizes)
    nv = n + n_extra
    c_extra = np.zeros(n_extra)
    c_extra[0] = 1.0
    mip = flow_master(network, od, n_extra, c_extra, np.zeros(n_extra),
                      np.full(n_extra, np.inf))
    mip.lp.lo[n] = -np.inf
    rows, senses, rhs = [], [], []
    budget = np.zeros(nv)
    budget[n] = -1.0
    off = n + 1
    for s, cols in zip(sup.sets, sup.columns):
        K, d = s.G.shape
        eta, lam, mu = off, off + 1, off + 1 + K
        budget[eta] = s.theta
        budget[lam:lam + K] = -s.h
        budget[mu:mu + K] = s.h
        for r in range(d):
            row = np.zeros(nv)
            row[lam:lam + K] = s.G[:, r]
            row[mu:mu + K] = -s.G[:, r]
            row[cols[r]] = 1.0
            rows.append(row)
            senses.append(EQ)
            rhs.append(0.0)
        for k in range(K):
            row = np.zeros(nv)
            row[lam + k] = 1.0
            row[mu + k] = 1.0
            row[eta] = -s.w[k]
            rows.append(row)
            senses.append(EQ)
            rhs.append(0.0)
        off += 2 * K + 1
    rows.append(budget)
    senses.append(LE)
    rhs.append(0.0)
    mip.lp = mip.lp.with_rows(np.array(rows), senses, np.array(rhs))
    return mip


def solve_subset_literal(network: Network, models, od: OdPair, method=Method.SVC):
    n = network.n
    sup = SubsetSupport(models, n=n, use_vertices=False)
    mip = subset_program(network, sup, od)
    with Timer() as tm:
        rep = solve_mip(mip, cycle_cuts(network, mip.lp.n_vars), gap_tol=GAP_TOL)
    return finish(rep, network, od, method, sup.models[0].nu,
                  lambda p: sup.value(p.incidence.astype(float), exact_lp=True), tm,
                  {"formulation": "literal"})


def drsp_program(network: Network, amb: WassersteinAmbiguity, od: OdPair) -> MipProblem:
    """Mixed 0-1 program with per-sample support multipliers.

    Variables ``[x, t, lam, s (N), gamma (N x n), eta (N x n)]``; the
    infinity-norm constraint is split into ``+-(gamma_i + x - eta_i) <= lam``.
    """
    n = network.n
    S, a, b = amb.samples, amb.support_lo, amb.support_hi
    N = S.shape[0]
    n_extra = 2 + N + 2 * N * n
    nv = n + n_extra
    c_extra = np.zeros(n_extra)
    c_extra[0] = 1.0
    c_extra[1] = amb.epsilon / amb.alpha
    c_extra[2:2 + N] = 1.0 / (amb.alpha * N)
    lo = np.zeros(n_extra)
    lo[0] = -np.inf
    mip = flow_master(network, od, n_extra, c_extra, lo, np.full(n_extra, np.inf))
    T, L, S0 = n, n + 1, n + 2
    G0 = S0 + N
    E0 = G0 + N * n

    rows, rhs = [], []
    for i in range(N):
        r = np.zeros(nv)
        r[:n] = S[i]
        r[G0 + i * n:G0 + (i + 1) * n] = S[i] - a
        r[E0 + i * n:E0 + (i + 1) * n] = b - S[i]
        r[T] = -1.0
        r[S0 + i] = -1.0
        rows.append(r)
        rhs.append(0.0)
        for j in range(n):
            for sign in (1.0, -1.0):
                r = np.zeros(nv)
                r[j] = sign
                r[G0 + i * n + j] = sign
                r[E0 + i * n + j] = -sign
                r[L] = -1.0
                rows.append(r)
                rhs.append(0.0)
    mip.lp = mip.lp.with_rows(np.array(rows), [LE] * len(rows), np.array(rhs))
    return mip


def solve_drsp_literal(network: Network, amb: WassersteinAmbiguity, od: OdPair):
    mip = drsp_program(network, amb, od)
    with Timer() as tm:
        rep = solve_mip(mip, cycle_cuts(network, mip.lp.n_vars), gap_tol=GAP_TOL)
    res = finish(rep, network, od, Method.DRSP, amb.epsilon,
                 lambda p: drsp_value(p.incidence.astype(float), amb), tm,
                 {"formulation": "literal"})
    res.diagnostics["literal_objective"] = rep.objective
    return res
