"""Run manifests: seed, settings and input digests as ``key = value`` lines."""

from __future__ import annotations

import hashlib
import time
from pathlib import Path as FsPath


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, seed: int, settings: dict, inputs=(), outputs=()) -> None:
    """Everything needed to repeat a run.  Only the timestamp line varies."""
    lines = [f"command = {command}", f"seed = {seed}"]
    for k in sorted(settings):
        lines.append(f"setting.{k} = {settings[k]}")
    for p in inputs:
        lines.append(f"input.{FsPath(p).name} = sha256:{file_digest(p)}")
    for p in outputs:
        if FsPath(p).exists():
            lines.append(f"output.{FsPath(p).name} = sha256:{file_digest(p)}")
    lines.append(f"timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}")
    FsPath(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    out = {}
    for line in FsPath(path).read_text().splitlines():
        k, sep, v = line.partition("=")
        if sep:
            out[k.strip()] = v.strip()
    return out
