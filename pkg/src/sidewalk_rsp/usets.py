"""Budgeted and ellipsoidal uncertainty sets and the Wasserstein ambiguity ball."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from .scenarios import (FreeFlowVector, ScenarioMatrix, TooFewScenarios,
                        empirical_moments)

log = logging.getLogger(__name__)

ELLIPSOID_RIDGE = 1e-8
DEFAULT_GAMMAS = tuple(range(1, 11))
DEFAULT_LAMBDAS = tuple(float(v) for v in range(1, 11))
DEFAULT_EPSILONS = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
DEFAULT_ALPHA = 0.3
DEFAULT_N_SAMPLES = 500


class BadGamma(ValueError):
    pass


class BadAlpha(ValueError):
    pass


class BadEpsilon(ValueError):
    pass


def _values(D):
    return D.values if isinstance(D, ScenarioMatrix) else np.asarray(D, dtype=float)


@dataclass(frozen=True)
class BudgetedSet:
    c_lo: np.ndarray
    d: np.ndarray
    gamma: int

    @property
    def n(self):
        return self.c_lo.size

    def worst_case(self, incidence) -> float:
        """Base cost plus the ``gamma`` largest deviations on the path."""
        x = np.asarray(incidence, dtype=float)
        on = x > 0.5
        dev = np.sort(self.d[on])[::-1]
        return float(self.c_lo[on].sum() + dev[: self.gamma].sum())

    def contains(self, u, tol=1e-12) -> bool:
        u = np.asarray(u, dtype=float)
        if np.any(u < self.c_lo - tol) or np.any(u > self.c_lo + self.d + tol):
            return False
        active = np.count_nonzero(u > self.c_lo + tol)
        return active <= self.gamma


def build_budgeted(D, gamma: int) -> BudgetedSet:
    X = _values(D)
    n = X.shape[1]
    if int(gamma) != gamma or not 0 <= gamma <= n:
        raise BadGamma(f"gamma must be an integer in [0, {n}], got {gamma}")
    c_lo = X.min(axis=0)
    d = X.max(axis=0) - c_lo
    return BudgetedSet(c_lo, d, int(gamma))


@dataclass(frozen=True)
class EllipsoidSet:
    center: np.ndarray
    shape: np.ndarray
    lambda_size: float
    regularization: float

    @property
    def n(self):
        return self.center.size

    def worst_case(self, incidence) -> float:
        x = np.asarray(incidence, dtype=float)
        return float(self.center @ x + np.sqrt(max(0.0, self.lambda_size * (x @ self.shape @ x))))

    def contains(self, u, tol=1e-9) -> bool:
        z = np.asarray(u, dtype=float) - self.center
        if self.lambda_size == 0:
            return bool(np.all(np.abs(z) <= tol))
        q = z @ np.linalg.solve(self.shape, z)
        return bool(q <= self.lambda_size * (1 + tol))


def build_ellipsoid(D, lambda_size: float, ridge: float = ELLIPSOID_RIDGE) -> EllipsoidSet:
    X = _values(D)
    if X.shape[0] < 2:
        raise TooFewScenarios("ellipsoid needs at least two scenarios")
    if lambda_size < 0:
        raise ValueError("lambda_size must be nonnegative")
    center, cov = empirical_moments(X)
    n = cov.shape[0]
    eps = ridge * np.trace(cov) / n
    shape = cov + eps * np.eye(n)
    return EllipsoidSet(center, shape, float(lambda_size), float(eps))


@dataclass(frozen=True)
class WassersteinAmbiguity:
    samples: np.ndarray
    epsilon: float
    alpha: float
    support_lo: np.ndarray
    support_hi: np.ndarray
    ground_norm_p: int = 1

    @property
    def n(self):
        return self.samples.shape[1]

    @property
    def n_samples(self):
        return self.samples.shape[0]


def build_wasserstein(D_train, freeflow, epsilon: float, alpha: float = DEFAULT_ALPHA,
                      n_samples: int | None = DEFAULT_N_SAMPLES, seed=0) -> WassersteinAmbiguity:
    """Empirical Wasserstein ball around a seeded subsample of the training rows.

    Support bounds run from the free-flow time to the largest observed
    time of the full training split.
    """
    X = _values(D_train)
    if not epsilon >= 0:
        raise BadEpsilon(f"epsilon must be nonnegative, got {epsilon}")
    if not 0 < alpha <= 1:
        raise BadAlpha(f"alpha must lie in (0, 1], got {alpha}")
    N = X.shape[0]
    if n_samples is None or n_samples >= N:
        if n_samples is not None and n_samples > N:
            log.info("requested %d samples but only %d rows; using all", n_samples, N)
        idx = np.arange(N)
    else:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(N, size=n_samples, replace=False))
    a = freeflow.values if isinstance(freeflow, FreeFlowVector) else np.asarray(freeflow, dtype=float)
    b = X.max(axis=0)
    a = np.minimum(a, b)
    S = X[idx]
    clipped = np.clip(S, a, b)
    if np.any(np.abs(clipped - S) > 1e-9):
        log.warning("clipped %d sample entries into the support box",
                    int(np.count_nonzero(np.abs(clipped - S) > 1e-9)))
    return WassersteinAmbiguity(clipped, float(epsilon), float(alpha), a.copy(), b.copy())


def _block(name, arr):
    buf = io.StringIO()
    arr = np.atleast_2d(arr)
    np.savetxt(buf, arr, delimiter=",", fmt="%.17g")
    return f"[{name}] {arr.shape[0]} {arr.shape[1]}\n{buf.getvalue()}"


def dumps_set(s) -> str:
    """Serialize a set: ``key = value`` scalars followed by CSV blocks."""
    if isinstance(s, BudgetedSet):
        head = f"type = budgeted\ngamma = {s.gamma}\n"
        return head + _block("c_lo", s.c_lo) + _block("d", s.d)
    if isinstance(s, EllipsoidSet):
        head = (f"type = ellipsoid\nlambda_size = {s.lambda_size!r}\n"
                f"regularization = {s.regularization!r}\n")
        return head + _block("center", s.center) + _block("shape", s.shape)
    if isinstance(s, WassersteinAmbiguity):
        head = (f"type = wasserstein\nepsilon = {s.epsilon!r}\nalpha = {s.alpha!r}\n"
                f"ground_norm_p = {s.ground_norm_p}\n")
        return (head + _block("support_lo", s.support_lo) + _block("support_hi", s.support_hi)
                + _block("samples", s.samples))
    raise TypeError(f"cannot serialize {type(s).__name__}")


def parse_blocks(text: str) -> tuple[dict, dict]:
    scalars, blocks = {}, {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("["):
            name, r, c = line[1:].replace("]", "").split()
            r, c = int(r), int(c)
            rows = lines[i:i + r]
            i += r
            blocks[name] = np.array([[float(v) for v in row.split(",")] for row in rows]).reshape(r, c)
        else:
            key, _, val = line.partition("=")
            scalars[key.strip()] = val.strip()
    return scalars, blocks


def loads_set(text: str):
    sc, bl = parse_blocks(text)
    kind = sc.get("type")
    if kind == "budgeted":
        return BudgetedSet(bl["c_lo"].ravel(), bl["d"].ravel(), int(sc["gamma"]))
    if kind == "ellipsoid":
        return EllipsoidSet(bl["center"].ravel(), bl["shape"], float(sc["lambda_size"]),
                            float(sc["regularization"]))
    if kind == "wasserstein":
        return WassersteinAmbiguity(bl["samples"], float(sc["epsilon"]), float(sc["alpha"]),
                                    bl["support_lo"].ravel(), bl["support_hi"].ravel(),
                                    int(sc["ground_norm_p"]))
    raise ValueError(f"unknown set type {kind!r}")
