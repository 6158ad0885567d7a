"""Plain-text round trip for trained SVC models."""

from __future__ import annotations

import numpy as np

from ..usets import _block, parse_blocks
from .kernel import WgikKernel
from .models import MklModel, SvcModel


def dumps_model(m) -> str:
    cols = ",".join(str(c) for c in m.columns)
    if isinstance(m, SvcModel):
        head = (f"type = svc\nnu = {m.nu!r}\ntheta = {m.theta!r}\ncolumns = {cols}\n"
                f"residual = {m.residual!r}\n")
        return (head + _block("alpha", m.alpha) + _block("sv_index", m.sv_index)
                + _block("bsv_index", m.bsv_index if m.bsv_index.size else np.array([-1]))
                + _block("q_matrix", m.kernel.q_matrix) + _block("l", m.kernel.l)
                + _block("data", m.data))
    if isinstance(m, MklModel):
        head = (f"type = mkl\nnu = {m.nu!r}\nrho = {m.rho!r}\nkappa = {m.kappa!r}\n"
                f"columns = {cols}\niterations = {m.iterations}\n")
        return (head + _block("alpha", m.alpha) + _block("sv_index", m.sv_index)
                + _block("bsv_index", m.bsv_index if m.bsv_index.size else np.array([-1]))
                + _block("directions", m.directions) + _block("scales", m.scales)
                + _block("weights", m.weights) + _block("selected", m.selected_kernels)
                + _block("data", m.data))
    raise TypeError(f"cannot serialize {type(m).__name__}")


def _idx(a):
    a = a.ravel().astype(int)
    return a[a >= 0]


def loads_model(text: str):
    sc, bl = parse_blocks(text)
    cols = tuple(int(c) for c in sc.get("columns", "").split(",") if c)
    if sc["type"] == "svc":
        k = WgikKernel(bl["q_matrix"], bl["l"].ravel())
        return SvcModel(bl["alpha"].ravel(), _idx(bl["sv_index"]), _idx(bl["bsv_index"]),
                        float(sc["theta"]), k, bl["data"], float(sc["nu"]), cols,
                        float(sc["residual"]))
    if sc["type"] == "mkl":
        return MklModel(bl["directions"], bl["scales"].ravel(), float(sc["kappa"]),
                        bl["weights"].ravel(), bl["alpha"].ravel(), float(sc["rho"]),
                        _idx(bl["selected"]), _idx(bl["sv_index"]), _idx(bl["bsv_index"]),
                        bl["data"], float(sc["nu"]), cols, int(sc["iterations"]))
    raise ValueError(f"unknown model type {sc['type']!r}")


def dumps_models(models) -> str:
    return "".join(f"=== model {i}\n" + dumps_model(m) for i, m in enumerate(models))


def loads_models(text: str) -> list:
    parts = [p for p in text.split("=== model ") if p.strip()]
    return [loads_model(p.split("\n", 1)[1]) for p in parts]
